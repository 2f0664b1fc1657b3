import type { Alarm, Device, RiskCell, RpcStatus } from '../src/types.js';

export function device(id: string, lat = -37.32, lon = -59.13): Device {
  return {
    device_id: id,
    site: { address: 'Calle 1', province: 'BA', country: 'AR' },
    responsible: { name: 'R', contact: 'r@x' },
    place_type: 'home',
    installer: 'i',
    species: 'Aedes aegypti',
    gps: { lat, lon },
    link: 'wifi_mqtt',
    fw_version: '1.0.0',
    camera: null,
    last_seen: '2026-01-02T00:00:00Z',
  };
}

export function alarm(deviceId: string, ruleId = 'tilt_overturned'): Alarm {
  return {
    alarm_id: 1,
    rule_id: ruleId,
    device_id: deviceId,
    metric: 'tilt',
    value: 'overturned',
    ts: '2026-01-02T03:00:00Z',
    severity: 'critical',
  };
}

export function riskCell(
  id: string,
  eggsPerTrap: number,
  traps: [string, number][] = [['ovi-01', eggsPerTrap]],
): RiskCell {
  return {
    cell_id: id,
    window_start: '2026-01-01T00:00:00Z',
    window_end: '2026-01-08T00:00:00Z',
    positive_trap_fraction: eggsPerTrap > 0 ? 1 : 0,
    eggs_per_trap: eggsPerTrap,
    trap_count: traps.length,
    traps: traps.map(([d, n]) => ({ device_id: d, window_total: n })),
  };
}

export function rpcStatus(
  requestId: string,
  status: RpcStatus['status'],
  eggCount?: number,
): RpcStatus {
  return {
    request_id: requestId,
    device_id: 'ovi-01',
    kind: 'read_on_demand',
    status,
    created_at: '2026-01-02T00:00:00Z',
    updated_at: '2026-01-02T00:00:10Z',
    params: {},
    response: eggCount === undefined ? null : { egg_count: eggCount },
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}
