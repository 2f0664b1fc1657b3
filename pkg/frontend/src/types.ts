// Shapes of the platform REST documents the dashboard consumes.

export interface GpsPoint {
  lat: number;
  lon: number;
}

export interface Device {
  device_id: string;
  site: { address?: string; province?: string; country?: string };
  responsible: { name?: string; contact?: string };
  place_type: string;
  installer: string;
  species: string;
  gps: GpsPoint;
  link: string;
  fw_version: string;
  camera: Record<string, string> | null;
  last_seen: string | null;
}

export interface SeriesPoint {
  ts: string;
  value: number | boolean | string;
}

export interface Series {
  device_id: string;
  key: string;
  points: SeriesPoint[];
}

export interface Alarm {
  alarm_id: number;
  rule_id: string;
  device_id: string;
  metric: string;
  value: unknown;
  ts: string;
  severity: string;
}

export interface RiskTrap {
  device_id: string;
  window_total: number;
}

export interface RiskCell {
  cell_id: string;
  window_start: string;
  window_end: string;
  positive_trap_fraction: number;
  eggs_per_trap: number;
  trap_count: number;
  traps: RiskTrap[];
}

export interface RiskMap {
  at: number;
  grid_m: number;
  cells: RiskCell[];
}

export interface RpcStatus {
  request_id: string;
  device_id: string;
  kind: string;
  status: 'pending' | 'delivered' | 'answered' | 'timeout' | 'failed';
  created_at: string;
  updated_at: string;
  params: Record<string, unknown>;
  response: { egg_count?: number; assay_id?: number; ok?: boolean } | null;
}

export interface IngestEvent {
  device_id: string;
  ts: string;
  kind: string;
  egg_count: number;
  link: string;
  lag_s: number;
}

export type StreamPayload =
  | { type: 'ingest'; data: IngestEvent }
  | { type: 'alarm'; data: Alarm }
  | { type: 'rpc'; data: RpcStatus };
