// Typed client for the platform REST API. Every value the UI shows comes
// through here; nothing is fabricated client-side.

import type { Alarm, Device, RiskMap, RpcStatus, Series } from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private base: string = '',
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let code = `http_${resp.status}`;
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { error?: string; detail?: string };
        code = body.error ?? code;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, code, detail);
    }
    return (await resp.json()) as T;
  }

  listDevices(): Promise<Device[]> {
    return this.request<Device[]>('/devices');
  }

  getDevice(id: string): Promise<Device> {
    return this.request<Device>(`/devices/${encodeURIComponent(id)}`);
  }

  series(id: string, key: string, from?: string, to?: string): Promise<Series> {
    const q = new URLSearchParams({ key });
    if (from) q.set('from', from);
    if (to) q.set('to', to);
    return this.request<Series>(
      `/devices/${encodeURIComponent(id)}/series?${q.toString()}`,
    );
  }

  alarms(from?: string, to?: string): Promise<Alarm[]> {
    const q = new URLSearchParams();
    if (from) q.set('from', from);
    if (to) q.set('to', to);
    const suffix = q.size ? `?${q.toString()}` : '';
    return this.request<Alarm[]>(`/alarms${suffix}`);
  }

  riskMap(at?: string, gridM?: number): Promise<RiskMap> {
    const q = new URLSearchParams();
    if (at) q.set('at', at);
    if (gridM) q.set('grid', String(gridM));
    const suffix = q.size ? `?${q.toString()}` : '';
    return this.request<RiskMap>(`/riskmap${suffix}`);
  }

  issueRpc(
    deviceId: string,
    kind: string,
    params: Record<string, unknown> = {},
  ): Promise<{ request_id: string; status: string }> {
    return this.request(`/devices/${encodeURIComponent(deviceId)}/rpc`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ kind, ...params }),
    });
  }

  rpcStatus(requestId: string): Promise<RpcStatus> {
    return this.request<RpcStatus>(`/rpc/${encodeURIComponent(requestId)}`);
  }
}
