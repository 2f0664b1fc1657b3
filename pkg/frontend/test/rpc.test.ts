import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { RpcPanel } from '../src/rpc.js';
import { jsonResponse, rpcStatus } from './fixtures.js';

function panel(responses: Response[]) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchImpl = (async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), init });
    return responses.shift() ?? jsonResponse({});
  }) as typeof fetch;
  const el = document.createElement('div');
  document.body.appendChild(el);
  return { panel: new RpcPanel(new ApiClient('', fetchImpl), el), el, calls };
}

describe('RPC panel', () => {
  it('issues an on-demand read and shows the returned count on answer', async () => {
    const { panel: p, el, calls } = panel([
      jsonResponse({ request_id: 'rpc-000007', status: 'pending' }),
    ]);
    const rid = await p.issueRead('ovi-01');
    expect(rid).toBe('rpc-000007');
    expect(calls[0].url).toBe('/devices/ovi-01/rpc');
    expect(el.textContent).toContain('rpc-000007');

    // live trail from the stream: pending -> delivered -> answered
    p.onRpcEvent(rpcStatus(rid, 'pending'));
    p.onRpcEvent(rpcStatus(rid, 'delivered'));
    expect(el.textContent).toContain('pending → delivered');
    expect(el.textContent).not.toContain('eggs read');

    p.onRpcEvent(rpcStatus(rid, 'answered', 5));
    expect(el.textContent).toContain('pending → delivered → answered');
    expect(el.textContent).toContain('eggs read: 5');
  });

  it('renders reschedule acknowledgements without a count', async () => {
    const { panel: p, el } = panel([
      jsonResponse({ request_id: 'rpc-000008', status: 'pending' }),
    ]);
    const rid = await p.issueReschedule('ovi-01', 4, 6);
    const st = rpcStatus(rid, 'answered');
    st.kind = 'reschedule';
    st.response = { ok: true };
    p.onRpcEvent(st);
    expect(el.textContent).toContain('acknowledged');
  });

  it('shows timeout as an error state', async () => {
    const { panel: p, el } = panel([
      jsonResponse({ request_id: 'rpc-000009', status: 'pending' }),
    ]);
    const rid = await p.issueRead('ovi-01');
    p.onRpcEvent(rpcStatus(rid, 'timeout'));
    expect(el.querySelector('.rpc-error')?.textContent).toBe('timeout');
  });

  it('ignores rpc events for requests issued elsewhere', async () => {
    const { panel: p, el } = panel([
      jsonResponse({ request_id: 'rpc-000010', status: 'pending' }),
    ]);
    await p.issueRead('ovi-01');
    p.onRpcEvent(rpcStatus('rpc-999999', 'answered', 3));
    expect(p.trailOf('rpc-999999')).toHaveLength(0);
    expect(el.textContent).not.toContain('eggs read: 3');
  });
});
