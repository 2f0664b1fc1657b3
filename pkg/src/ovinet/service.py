"""Surveillance backend: registry, ingestion, time series, alarms, risk map, RPC.

The store is append-only (per-device/per-metric sorted point lists) with
idempotent ingestion, so replaying any event log reproduces it exactly.
"""

from __future__ import annotations

import itertools
import json
import math
import queue
import threading
from bisect import bisect_left, bisect_right, insort
from dataclasses import asdict, dataclass, field

from .errors import (
    DuplicateDeviceError,
    InvalidRangeError,
    UnknownDeviceError,
    UnknownRequestError,
)
from .simclock import iso_utc
from .telemetry import TelemetryEvent, TiltState

WINDOW_DAYS = 7
DAY_S = 86400.0
EARTH_M_PER_DEG = 111_320.0


@dataclass
class PlatformConfig:
    temperature_min_c: float = 10.0
    temperature_max_c: float = 40.0
    humidity_min_pct: float = 20.0
    humidity_max_pct: float = 95.0
    rpc_timeout_s: float = 120.0
    # Class-A downlinks wait for the device's next uplink, up to a full
    # schedule period; budget for the slowest cadence plus the response.
    rpc_timeout_lora_s: float = 25 * 3600.0
    default_grid_m: float = 500.0
    webhook = None   # optional callable(alarm_dict)


@dataclass
class DeviceRecord:
    device_id: str
    site: dict
    responsible: dict
    place_type: str
    installer: str
    species: str
    gps: tuple
    link: str
    fw_version: str = "1.0.0"
    camera: dict | None = None
    last_seen: float | None = None

    def public(self) -> dict:
        d = asdict(self)
        d["gps"] = {"lat": self.gps[0], "lon": self.gps[1]}
        d["last_seen"] = iso_utc(self.last_seen) if self.last_seen else None
        return d


@dataclass(frozen=True)
class Condition:
    kind: str          # above | below | equals
    value: object

    def matches(self, value) -> bool:
        if self.kind == "above":
            return value > self.value
        if self.kind == "below":
            return value < self.value
        return value == self.value


@dataclass(frozen=True)
class AlarmRule:
    rule_id: str
    metric: str
    condition: Condition
    severity: str = "warning"
    action: str = "record"     # record | webhook


def default_rules(cfg: PlatformConfig) -> list:
    return [
        AlarmRule("temp_high", "temperature_c",
                  Condition("above", cfg.temperature_max_c)),
        AlarmRule("temp_low", "temperature_c",
                  Condition("below", cfg.temperature_min_c)),
        AlarmRule("hum_high", "humidity_pct",
                  Condition("above", cfg.humidity_max_pct)),
        AlarmRule("hum_low", "humidity_pct",
                  Condition("below", cfg.humidity_min_pct)),
        AlarmRule("tilt_overturned", "tilt",
                  Condition("equals", TiltState.OVERTURNED.value), "critical"),
        AlarmRule("water_absent", "water", Condition("equals", False), "critical"),
    ]


@dataclass
class Alarm:
    alarm_id: int
    rule_id: str
    device_id: str
    metric: str
    value: object
    ts: float
    severity: str

    def public(self) -> dict:
        return {
            "alarm_id": self.alarm_id,
            "rule_id": self.rule_id,
            "device_id": self.device_id,
            "metric": self.metric,
            "value": self.value,
            "ts": iso_utc(self.ts),
            "severity": self.severity,
        }


@dataclass
class RiskCell:
    cell_id: str
    window_start: float
    window_end: float
    positive_trap_fraction: float
    eggs_per_trap: float
    trap_count: int
    traps: list = field(default_factory=list)   # (device_id, window_total)

    def public(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "window_start": iso_utc(self.window_start),
            "window_end": iso_utc(self.window_end),
            "positive_trap_fraction": self.positive_trap_fraction,
            "eggs_per_trap": self.eggs_per_trap,
            "trap_count": self.trap_count,
            "traps": [{"device_id": d, "window_total": n} for d, n in self.traps],
        }


@dataclass
class RpcStatus:
    request_id: str
    device_id: str
    kind: str
    status: str             # pending | delivered | answered | timeout | failed
    created_at: float
    updated_at: float
    params: dict = field(default_factory=dict)
    response: dict | None = None

    def public(self) -> dict:
        return {
            "request_id": self.request_id,
            "device_id": self.device_id,
            "kind": self.kind,
            "status": self.status,
            "created_at": iso_utc(self.created_at),
            "updated_at": iso_utc(self.updated_at),
            "params": self.params,
            "response": self.response,
        }


@dataclass
class IngestOutcome:
    accepted: bool
    reason: str = "stored"
    points_added: int = 0
    alarms: list = field(default_factory=list)


def grid_cell_id(lat: float, lon: float, grid_m: float) -> str:
    """Deterministic equirectangular grid key; lon width taken at the lat band."""
    dlat = grid_m / EARTH_M_PER_DEG
    lat_idx = math.floor(lat / dlat)
    band_center = (lat_idx + 0.5) * dlat
    dlon = grid_m / (EARTH_M_PER_DEG * max(0.01, math.cos(math.radians(band_center))))
    lon_idx = math.floor(lon / dlon)
    return f"g{int(grid_m)}:{lat_idx}:{lon_idx}"


class PlatformService:
    """In-memory store + rule engine behind the REST layer.

    Appends are serialized by a lock; reads take immutable snapshots of the
    already-appended history.
    """

    def __init__(self, config: PlatformConfig | None = None, scheduler=None,
                 rpc_transport=None):
        self.config = config or PlatformConfig()
        self.scheduler = scheduler
        self.rpc_transport = rpc_transport   # callable(device_id, kind, params, request_id)
        self.rules = default_rules(self.config)
        self.devices: dict = {}
        self.points: dict = {}               # (device_id, key) -> [(ts, value)]
        self.alarms: list = []
        self.quarantine: list = []
        self.rpc: dict = {}
        self.ingest_count = 0
        self.max_lag_s = 0.0
        self._event_keys: set = set()
        self._rule_state: dict = {}
        self._alarm_seq = itertools.count(1)
        self._rpc_seq = itertools.count(1)
        self._lock = threading.Lock()
        self._subscribers: list = []

    # --- live-update channel ------------------------------------------------

    def subscribe(self) -> "queue.Queue":
        q: queue.Queue = queue.Queue(maxsize=1000)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _push(self, kind: str, data: dict) -> None:
        for q in list(self._subscribers):
            try:
                q.put_nowait({"type": kind, "data": data})
            except queue.Full:
                pass

    # --- registry -------------------------------------------------------------

    def register_device(self, record: DeviceRecord) -> DeviceRecord:
        with self._lock:
            existing = self.devices.get(record.device_id)
            if existing is not None:
                same = asdict(existing) | {"last_seen": None, "camera": None}
                new = asdict(record) | {"last_seen": None, "camera": None}
                if same == new:
                    return existing       # idempotent re-registration
                raise DuplicateDeviceError(
                    f"device {record.device_id} already registered differently")
            self.devices[record.device_id] = record
            return record

    def get_device(self, device_id: str) -> DeviceRecord:
        rec = self.devices.get(device_id)
        if rec is None:
            raise UnknownDeviceError(f"unknown device {device_id}")
        return rec

    def list_devices(self) -> list:
        return [self.devices[k] for k in sorted(self.devices)]

    # --- ingestion --------------------------------------------------------------

    def quarantine_raw(self, source: str, payload, error: str, t: float) -> None:
        with self._lock:
            self.quarantine.append(
                {"source": source, "payload": str(payload)[:2000],
                 "error": error, "t": t})

    def _append_point(self, device_id: str, key: str, ts: float, value) -> bool:
        series = self.points.setdefault((device_id, key), [])
        probe = bisect_left(series, (ts,))
        if probe < len(series) and series[probe][0] == ts:
            return False          # (device_id, key, ts) unique: idempotent skip
        insort(series, (ts, value))
        return True

    def ingest(self, ev: TelemetryEvent, receipt_ts: float) -> IngestOutcome:
        with self._lock:
            rec = self.devices.get(ev.device_id)
            if rec is None:
                self.quarantine.append(
                    {"source": "ingest", "payload": ev.device_id,
                     "error": "unknown_device", "t": receipt_ts})
                return IngestOutcome(False, "unknown_device")
            # identity of one event on an at-least-once transport; kind
            # disambiguates an alert landing at a scheduled event's instant
            key = (ev.device_id, ev.ts, ev.kind)
            if key in self._event_keys:
                return IngestOutcome(True, "duplicate")
            self._event_keys.add(key)

            added = 0
            fired = []
            for reading in ev.readings:
                if self._append_point(ev.device_id, "egg_count",
                                      reading.ts, reading.egg_count):
                    added += 1
                    fired += self.evaluate_rules_locked(
                        ev.device_id, "egg_count", reading.ts, reading.egg_count)
            lag = receipt_ts - ev.ts
            event_metrics = [
                ("temperature_c", ev.temperature_c),
                ("humidity_pct", ev.humidity_pct),
                ("water", ev.water_present),
                ("tilt", ev.tilt_state.value),
                ("lid", ev.lid_open),
                ("battery_pct", ev.battery_pct),
                ("rssi", ev.signal_dbm),
                ("ingest_lag_s", lag),
            ]
            for key_name, value in event_metrics:
                if self._append_point(ev.device_id, key_name, ev.ts, value):
                    added += 1
                    fired += self.evaluate_rules_locked(
                        ev.device_id, key_name, ev.ts, value)

            rec.last_seen = max(rec.last_seen or 0.0, receipt_ts)
            if ev.camera is not None:
                rec.camera = {
                    "sensor": ev.camera.sensor_model, "hw": ev.camera.hw_version,
                    "fw": ev.camera.fw_version, "hal": ev.camera.hal_version,
                    "os": ev.camera.os_version, "frame_size": ev.camera.frame_size,
                    "pixformat": ev.camera.pixformat,
                }
            rec.fw_version = ev.fw_version or rec.fw_version
            self.ingest_count += 1
            self.max_lag_s = max(self.max_lag_s, lag)

        self._push("ingest", {
            "device_id": ev.device_id,
            "ts": iso_utc(ev.ts),
            "kind": ev.kind,
            "egg_count": ev.latest_reading.egg_count,
            "link": ev.link.value,
            "lag_s": lag,
        })
        for alarm in fired:
            self._push("alarm", alarm.public())
        return IngestOutcome(True, "stored", added, fired)

    # --- rules ---------------------------------------------------------------

    def evaluate_rules_locked(self, device_id: str, metric: str,
                              ts: float, value) -> list:
        fired = []
        for rule in self.rules:
            if rule.metric != metric:
                continue
            state_key = (rule.rule_id, device_id)
            violating = rule.condition.matches(value)
            was = self._rule_state.get(state_key, False)
            if violating and not was:
                alarm = Alarm(next(self._alarm_seq), rule.rule_id, device_id,
                              metric, value, ts, rule.severity)
                self.alarms.append(alarm)
                fired.append(alarm)
                if rule.action == "webhook" and self.config.webhook is not None:
                    try:
                        self.config.webhook(alarm.public())
                    except Exception:
                        pass
            self._rule_state[state_key] = violating
        return fired

    def evaluate_rules(self, device_id: str, metric: str, ts: float, value,
                       rules=None) -> list:
        """Edge-triggered evaluation of one point; returns fired alarms."""
        with self._lock:
            if rules is not None:
                saved, self.rules = self.rules, rules
                try:
                    return self.evaluate_rules_locked(device_id, metric, ts, value)
                finally:
                    self.rules = saved
            return self.evaluate_rules_locked(device_id, metric, ts, value)

    def alarms_between(self, frm: float | None, to: float | None) -> list:
        return [a for a in self.alarms
                if (frm is None or a.ts >= frm) and (to is None or a.ts <= to)]

    # --- queries ---------------------------------------------------------------

    def query_series(self, device_id: str, key: str, frm: float, to: float) -> list:
        if device_id not in self.devices:
            raise UnknownDeviceError(f"unknown device {device_id}")
        if frm > to:
            raise InvalidRangeError(f"from {frm} > to {to}")
        series = self.points.get((device_id, key), [])
        lo = bisect_left(series, (frm,))
        hi = bisect_right(series, (to, float("inf")))
        return series[lo:hi]

    def risk_map(self, window_end: float, grid_size_m: float | None = None) -> list:
        """Trailing-7-day cells: positive-trap fraction and eggs per trap.

        A trap's window total is the sum over UTC days of that day's maximum
        egg count (four same-scene readings a day must not count 4x).
        """
        grid_m = grid_size_m or self.config.default_grid_m
        window_start = window_end - WINDOW_DAYS * DAY_S
        per_cell: dict = {}
        for device_id, rec in self.devices.items():
            series = self.points.get((device_id, "egg_count"), [])
            lo = bisect_left(series, (window_start,))
            hi = bisect_right(series, (window_end, float("inf")))
            window = series[lo:hi]
            if not window:
                continue
            daily: dict = {}
            for ts, value in window:
                day = math.floor(ts / DAY_S)
                daily[day] = max(daily.get(day, 0), int(value))
            total = sum(daily.values())
            cell = grid_cell_id(rec.gps[0], rec.gps[1], grid_m)
            per_cell.setdefault(cell, []).append((device_id, total))
        cells = []
        for cell_id in sorted(per_cell):
            traps = sorted(per_cell[cell_id])
            n = len(traps)
            positive = sum(1 for _d, total in traps if total > 0)
            cells.append(RiskCell(
                cell_id=cell_id,
                window_start=window_start,
                window_end=window_end,
                positive_trap_fraction=positive / n,
                eggs_per_trap=sum(t for _d, t in traps) / n,
                trap_count=n,
                traps=traps,
            ))
        return cells

    # --- RPC ------------------------------------------------------------------

    def dispatch_rpc(self, device_id: str, kind: str, params: dict | None = None) -> str:
        rec = self.get_device(device_id)
        params = params or {}
        now = self.scheduler.now if self.scheduler else 0.0
        request_id = f"rpc-{next(self._rpc_seq):06d}"
        status = RpcStatus(request_id, device_id, kind, "pending", now, now,
                           params=params)
        with self._lock:
            self.rpc[request_id] = status
        self._push("rpc", status.public())
        if self.rpc_transport is not None:
            self.rpc_transport(device_id, kind, params, request_id)
        if self.scheduler is not None:
            timeout = (self.config.rpc_timeout_lora_s if rec.link == "lorawan"
                       else self.config.rpc_timeout_s)
            self.scheduler.after(timeout, self._expire_rpc, request_id)
        return request_id

    def get_rpc(self, request_id: str) -> RpcStatus:
        status = self.rpc.get(request_id)
        if status is None:
            raise UnknownRequestError(f"unknown rpc request {request_id}")
        return status

    def _transition_rpc(self, request_id: str, new_status: str, t: float,
                        response: dict | None = None) -> None:
        status = self.rpc.get(request_id)
        if status is None:
            return
        status.status = new_status
        status.updated_at = t
        if response is not None:
            status.response = response
        self._push("rpc", status.public())

    def mark_rpc_delivered(self, request_id: str, t: float) -> None:
        status = self.rpc.get(request_id)
        if status is not None and status.status == "pending":
            self._transition_rpc(request_id, "delivered", t)

    def mark_rpc_answered(self, request_id: str, response: dict, t: float) -> None:
        status = self.rpc.get(request_id)
        if status is not None and status.status in ("pending", "delivered"):
            self._transition_rpc(request_id, "answered", t, response)

    def mark_rpc_failed(self, request_id: str, t: float) -> None:
        status = self.rpc.get(request_id)
        if status is not None and status.status in ("pending", "delivered"):
            self._transition_rpc(request_id, "failed", t)

    def _expire_rpc(self, request_id: str) -> None:
        status = self.rpc.get(request_id)
        if status is not None and status.status in ("pending", "delivered"):
            self._transition_rpc(request_id, "timeout",
                                 self.scheduler.now if self.scheduler else 0.0)

    # --- export -----------------------------------------------------------------

    def export_lines(self):
        """Full-store dump as line-delimited JSON records."""
        for device_id in sorted(self.devices):
            yield json.dumps({"record": "device",
                              **self.devices[device_id].public()},
                             separators=(",", ":"))
        for (device_id, key) in sorted(self.points):
            for ts, value in self.points[(device_id, key)]:
                yield json.dumps(
                    {"record": "point", "device_id": device_id, "key": key,
                     "ts": iso_utc(ts), "value": value}, separators=(",", ":"))
        for alarm in self.alarms:
            yield json.dumps({"record": "alarm", **alarm.public()},
                             separators=(",", ":"))
