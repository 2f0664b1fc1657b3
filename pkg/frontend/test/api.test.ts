import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { device, jsonResponse } from './fixtures.js';

function capture(responses: Response[]) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchImpl = async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), init });
    return responses.shift() ?? jsonResponse({});
  };
  return { calls, fetchImpl: fetchImpl as typeof fetch };
}

describe('ApiClient', () => {
  it('lists devices from /devices', async () => {
    const { calls, fetchImpl } = capture([jsonResponse([device('ovi-01')])]);
    const api = new ApiClient('', fetchImpl);
    const devices = await api.listDevices();
    expect(calls[0].url).toBe('/devices');
    expect(devices).toHaveLength(1);
    expect(devices[0].device_id).toBe('ovi-01');
  });

  it('builds series queries with from/to', async () => {
    const { calls, fetchImpl } = capture([
      jsonResponse({ device_id: 'ovi-01', key: 'egg_count', points: [] }),
    ]);
    const api = new ApiClient('', fetchImpl);
    await api.series('ovi-01', 'egg_count', '2026-01-01T00:00:00Z');
    expect(calls[0].url).toBe(
      '/devices/ovi-01/series?key=egg_count&from=2026-01-01T00%3A00%3A00Z',
    );
  });

  it('posts RPC commands with parameters', async () => {
    const { calls, fetchImpl } = capture([
      jsonResponse({ request_id: 'rpc-000001', status: 'pending' }),
    ]);
    const api = new ApiClient('', fetchImpl);
    const out = await api.issueRpc('ovi-01', 'reschedule', {
      tx_per_day: 4,
      reading_period_h: 6,
    });
    expect(out.request_id).toBe('rpc-000001');
    expect(calls[0].url).toBe('/devices/ovi-01/rpc');
    expect(calls[0].init?.method).toBe('POST');
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      kind: 'reschedule',
      tx_per_day: 4,
      reading_period_h: 6,
    });
  });

  it('surfaces platform error bodies verbatim', async () => {
    const { fetchImpl } = capture([
      jsonResponse({ error: 'not_found', detail: 'unknown device ghost' }, 404),
    ]);
    const api = new ApiClient('', fetchImpl);
    await expect(api.getDevice('ghost')).rejects.toThrowError(
      /not_found: unknown device ghost/,
    );
    try {
      await api.getDevice('ghost');
    } catch (err) {
      expect((err as ApiError).status).toBe(404);
    }
  });

  it('prefixes a configured base URL', async () => {
    const { calls, fetchImpl } = capture([jsonResponse([])]);
    const api = new ApiClient('http://localhost:8000', fetchImpl);
    await api.alarms();
    expect(calls[0].url).toBe('http://localhost:8000/alarms');
  });
});
