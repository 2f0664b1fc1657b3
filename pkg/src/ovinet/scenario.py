"""Whole-system experiments on the virtual clock.

A Scenario bundles device configs with a per-day script: ground-truth egg
counts, sensor events, and detection overrides (scripted per-day miss
counts applied at the reading-result boundary). run() replays it through
the full device/network/platform stack and builds a deterministic report.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from functools import partial

from .detector import DetectorConfig
from .device import (
    DeviceConfig,
    LorawanSettings,
    PowerModel,
    Responsible,
    SceneSensing,
    SimDevice,
    Site,
    WifiSettings,
)
from .errors import ScenarioValidationError
from .netsim import LinkProfile
from .service import PlatformConfig
from .simclock import iso_utc, parse_instant
from .synthgen import GeneratorParams, generate_scene
from .telemetry import LinkKind, TiltState
from .world import World

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DAY_S = 86400.0

EVENT_KINDS = {
    "tilt_overturned": {"tilt": "overturned"},
    "tilt_reset": {"tilt": "well_positioned"},
    "water_lost": {"water_present": False},
    "water_restored": {"water_present": True},
    "lid_open": {"lid_open": True},
    "lid_close": {"lid_open": False},
    "set_temperature": {"temperature_c": None},
    "set_humidity": {"humidity_pct": None},
}


@dataclass
class ScriptEvent:
    day: int              # 1-based
    hour: float
    kind: str
    value: float | None = None


@dataclass
class DeviceScript:
    config: DeviceConfig
    eggs: list                      # ground truth per day, len == duration_days
    distractors: int = 0
    miss: dict = field(default_factory=dict)     # day -> undercount
    events: list = field(default_factory=list)   # ScriptEvent


@dataclass
class Scenario:
    name: str
    start_ts: float
    duration_days: int
    seed: int
    devices: list                   # DeviceScript
    periods: list = field(default_factory=list)  # (label, first_day, last_day)
    grid_size_m: float = 500.0
    wifi_latency_s: tuple = (0.02, 0.2)
    lora_latency_s: tuple = (0.05, 0.4)
    loss_rate: float = 0.0

    def validate(self) -> None:
        if self.duration_days < 1:
            raise ScenarioValidationError("duration_days must be >= 1")
        if not self.devices:
            raise ScenarioValidationError("scenario has no devices")
        ids = [d.config.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ScenarioValidationError("duplicate device ids")
        for script in self.devices:
            n = len(script.eggs)
            if n != self.duration_days:
                raise ScenarioValidationError(
                    f"{script.config.device_id}: egg script covers {n} days, "
                    f"scenario lasts {self.duration_days}")
            if any(c < 0 for c in script.eggs):
                raise ScenarioValidationError("negative ground-truth egg count")
            for day in script.miss:
                if not (1 <= day <= self.duration_days):
                    raise ScenarioValidationError(f"miss references day {day}")
                if script.miss[day] < 0:
                    raise ScenarioValidationError("negative miss count")
            for ev in script.events:
                if not (1 <= ev.day <= self.duration_days):
                    raise ScenarioValidationError(f"event references day {ev.day}")
                if ev.kind not in EVENT_KINDS:
                    raise ScenarioValidationError(f"unknown event kind {ev.kind!r}")

    def period_label(self, day: int) -> str:
        for label, first, last in self.periods:
            if first <= day <= last:
                return label
        return ""


# --- scenario file ----------------------------------------------------------

def _config_from_table(t: dict) -> DeviceConfig:
    link = LinkKind(t.get("link", "wifi_mqtt"))
    wifi = lorawan = None
    if link is LinkKind.WIFI_MQTT:
        wifi = WifiSettings(t.get("wifi_network", "lab"),
                            t.get("wifi_secret", "secret"))
    else:
        lorawan = LorawanSettings(t.get("lora_app_key", "00" * 16))
    return DeviceConfig(
        device_id=t["id"],
        site=Site(t.get("address", ""), t.get("province", ""), t.get("country", "")),
        responsible=Responsible(t.get("responsible_name", ""),
                                t.get("responsible_contact", "")),
        place_type=t.get("place_type", "field"),
        installer=t.get("installer", ""),
        gps=(float(t.get("lat", 0.0)), float(t.get("lon", 0.0))),
        link=link,
        wifi=wifi,
        lorawan=lorawan,
        reading_period_h=float(t.get("reading_period_h", 6.0)),
        tx_per_day=t.get("tx_per_day"),
        fw_version=t.get("fw_version", "1.0.0"),
    )


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    try:
        meta = doc["scenario"]
        devices = []
        for t in doc.get("device", []):
            events = [
                ScriptEvent(day=int(e["day"]), hour=float(e.get("hour", 12.0)),
                            kind=e["kind"], value=e.get("value"))
                for e in t.get("event", [])
            ]
            devices.append(DeviceScript(
                config=_config_from_table(t),
                eggs=[int(c) for c in t.get("eggs", [])],
                distractors=int(t.get("distractors", 0)),
                miss={int(k): int(v) for k, v in t.get("miss", {}).items()},
                events=events,
            ))
        periods = [(p["label"], int(p["from"]), int(p["to"]))
                   for p in doc.get("period", [])]
        scn = Scenario(
            name=meta.get("name", "scenario"),
            start_ts=parse_instant(meta["start"]),
            duration_days=int(meta["days"]),
            seed=int(meta.get("seed", 0)),
            devices=devices,
            periods=periods,
            grid_size_m=float(meta.get("grid_size_m", 500.0)),
            wifi_latency_s=tuple(meta.get("wifi_latency_s", (0.02, 0.2))),
            lora_latency_s=tuple(meta.get("lora_latency_s", (0.05, 0.4))),
            loss_rate=float(meta.get("loss_rate", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioValidationError(f"{path}: {exc}") from exc
    scn.validate()
    return scn


# --- the 28-day proof-of-concept ledger --------------------------------------

POC_DAY_COUNTS = [2, 3, 5, 7, 8, 8, 9,
                  0, 0, 0, 0, 0, 0, 0,
                  9, 10, 10, 5, 4,
                  11, 11, 1, 3, 5, 9, 9, 0, 0]
POC_MISSES = {7: 1, 16: 1, 17: 1}
POC_PERIODS = [("PA", 1, 7), ("PB", 8, 14), ("PC", 15, 19), ("PD", 20, 28)]

VALIDATION_COUNTS = [3, 10, 2, 8, 10, 7, 9, 4, 5, 9]


def poc28_scenario(seed: int = 42,
                   start: str = "2026-01-01T00:00:00Z") -> Scenario:
    """The 28-day single-device WiFi replay (4 tx/day, one reading each)."""
    cfg = DeviceConfig(
        device_id="ovi-01",
        site=Site("Av. Centenario 100", "Buenos Aires", "Argentina"),
        responsible=Responsible("field team", "field@example.org"),
        place_type="field",
        installer="installer-1",
        gps=(-37.3217, -59.1332),
        link=LinkKind.WIFI_MQTT,
        wifi=WifiSettings("lab-net", "s3cret"),
        reading_period_h=6.0,
        tx_per_day=4,
    )
    script = DeviceScript(config=cfg, eggs=list(POC_DAY_COUNTS),
                          distractors=0, miss=dict(POC_MISSES))
    return Scenario(name="poc28", start_ts=parse_instant(start),
                    duration_days=28, seed=seed, devices=[script],
                    periods=list(POC_PERIODS))


# --- run ---------------------------------------------------------------------

@dataclass
class DayRow:
    day: int
    period: str
    ground_truth: int
    measurements: list          # M1..Mn
    measured: int               # daily figure: max of measurements (0 if none)

    def ok(self) -> bool:
        return self.measured == self.ground_truth


@dataclass
class DeviceReport:
    device_id: str
    link: str
    rows: list
    ground_truth_total: int
    measured_total: int
    final_battery_mah: float = 0.0


@dataclass
class ExperimentReport:
    scenario: str
    seed: int
    start: str
    duration_days: int
    devices: list
    communications: int
    readings_total: int
    max_lag_s: float
    alarms: list
    accuracy_pct: float
    ground_truth_total: int
    measured_total: int

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario,
            "seed": self.seed,
            "start": self.start,
            "duration_days": self.duration_days,
            "communications": self.communications,
            "readings_total": self.readings_total,
            "max_lag_s": round(self.max_lag_s, 6),
            "accuracy_pct": round(self.accuracy_pct, 2),
            "ground_truth_total": self.ground_truth_total,
            "measured_total": self.measured_total,
            "alarms": self.alarms,
            "devices": [
                {
                    "device_id": d.device_id,
                    "link": d.link,
                    "ground_truth_total": d.ground_truth_total,
                    "measured_total": d.measured_total,
                    "final_battery_mah": round(d.final_battery_mah, 3),
                    "days": [
                        {
                            "day": r.day,
                            "period": r.period,
                            "ground_truth": r.ground_truth,
                            "measurements": r.measurements,
                            "measured": r.measured,
                            "ok": r.ok(),
                        }
                        for r in d.rows
                    ],
                }
                for d in self.devices
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def _miss_hook(script: DeviceScript, start_ts: float):
    """Drop the N lowest-confidence eggs on scripted-miss days."""

    def post(result, t_start):
        day = int((t_start - start_ts) // DAY_S) + 1
        n = script.miss.get(day, 0)
        if n <= 0 or not result.eggs:
            return result
        keep = sorted(result.eggs, key=lambda e: (e.avg_confidence, e.egg_id))[n:]
        keep.sort(key=lambda e: (e.centroid[1], e.centroid[0]))
        return replace(result, eggs=keep, egg_count=len(keep))

    return post


class _SceneProvider:
    """Per-day cached scene rasters for one device."""

    def __init__(self, scn: Scenario, script: DeviceScript,
                 params: GeneratorParams):
        self.scn = scn
        self.script = script
        self.params = params
        self._cache: dict = {}

    def __call__(self, t: float):
        day = int((t - self.scn.start_ts) // DAY_S)
        day = min(max(day, 0), self.scn.duration_days - 1)
        scene = self._cache.get(day)
        if scene is None:
            scene = generate_scene(
                self.params, self.script.eggs[day], self.script.distractors,
                scene_id=f"{self.script.config.device_id}-day{day + 1:02d}")
            self._cache = {day: scene}    # one day live at a time
        return scene.image


def build_world(scn: Scenario, detector_cfg: DetectorConfig | None = None,
                power: PowerModel | None = None, snapshots_dir=None,
                platform_config: PlatformConfig | None = None):
    """Assemble the simulated deployment for a scenario; nothing runs yet."""
    scn.validate()
    detector_cfg = detector_cfg or DetectorConfig()
    power = power or PowerModel()
    world = World(
        start_ts=scn.start_ts, seed=scn.seed,
        platform_config=platform_config,
        wifi_profile=LinkProfile.wifi(scn.wifi_latency_s, scn.loss_rate),
        lora_profile=LinkProfile.lorawan(scn.lora_latency_s, scn.loss_rate),
    )
    params = GeneratorParams(seed=scn.seed)
    devices = []
    for script in scn.devices:
        sensing = SceneSensing(
            cfg=detector_cfg,
            scene_provider=_SceneProvider(scn, script, params),
            device_id=script.config.device_id,
            archive_dir=snapshots_dir,
            post=_miss_hook(script, scn.start_ts),
        )
        device = SimDevice(sensing=sensing, power=power)
        device.apply_provisioning(script.config, scn.start_ts)
        host = world.add_device(device, activate_at=scn.start_ts)
        devices.append((script, device, host))
        for ev in script.events:
            t = scn.start_ts + (ev.day - 1) * DAY_S + ev.hour * 3600.0
            changes = dict(EVENT_KINDS[ev.kind])
            for k in changes:
                if changes[k] is None:
                    changes[k] = ev.value
                elif k == "tilt":
                    changes[k] = TiltState(changes[k])
            world.scheduler.at(t, partial(host.apply_sensor, **changes))
    return world, devices


def run(scn: Scenario, detector_cfg: DetectorConfig | None = None,
        power: PowerModel | None = None, snapshots_dir=None,
        platform_config: PlatformConfig | None = None,
        artifacts_dir=None) -> ExperimentReport:
    """Execute the scenario; deterministic for a fixed (scenario, seed).

    artifacts_dir, when given, receives the network trace and device logs.
    """
    world, devices = build_world(scn, detector_cfg, power, snapshots_dir,
                                 platform_config)
    end_ts = scn.start_ts + scn.duration_days * DAY_S
    world.run_until(end_ts - 1e-3)
    if artifacts_dir is not None:
        from pathlib import Path

        out = Path(artifacts_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.log").write_text("\n".join(world.trace.lines()) + "\n")
        device_lines = [line for _s, device, _h in devices for line in device.log]
        (out / "devices.log").write_text("\n".join(device_lines) + "\n")
    return _build_report(scn, world, devices)


def _build_report(scn: Scenario, world: World, devices) -> ExperimentReport:
    service = world.service
    device_reports = []
    gt_total = 0
    measured_total = 0
    readings_total = 0
    for script, device, _host in devices:
        device_id = script.config.device_id
        series = service.points.get((device_id, "egg_count"), [])
        readings_total += len(series)
        rows = []
        for day in range(1, scn.duration_days + 1):
            lo = scn.start_ts + (day - 1) * DAY_S
            hi = lo + DAY_S
            ms = [int(v) for ts, v in series if lo <= ts < hi]
            measured = max(ms) if ms else 0
            rows.append(DayRow(
                day=day,
                period=scn.period_label(day),
                ground_truth=script.eggs[day - 1],
                measurements=ms,
                measured=measured,
            ))
        dev_gt = sum(script.eggs)
        dev_measured = sum(r.measured for r in rows)
        gt_total += dev_gt
        measured_total += dev_measured
        device_reports.append(DeviceReport(
            device_id=device_id,
            link=script.config.link.value,
            rows=rows,
            ground_truth_total=dev_gt,
            measured_total=dev_measured,
            final_battery_mah=device.state.battery_mah,
        ))

    accuracy = 100.0 if gt_total == 0 and measured_total == 0 else \
        100.0 * measured_total / gt_total if gt_total else 0.0
    return ExperimentReport(
        scenario=scn.name,
        seed=scn.seed,
        start=iso_utc(scn.start_ts),
        duration_days=scn.duration_days,
        devices=device_reports,
        communications=service.ingest_count,
        readings_total=readings_total,
        max_lag_s=service.max_lag_s,
        alarms=[a.public() for a in service.alarms],
        accuracy_pct=accuracy,
        ground_truth_total=gt_total,
        measured_total=measured_total,
    )


# --- detection validation corpus ----------------------------------------------

@dataclass
class ValidationRow:
    sample_id: str
    existing: int
    read: int
    eggs: list                     # (egg_id, avg_confidence)


@dataclass
class ValidationReport:
    rows: list
    existing_total: int
    read_total: int

    def all_match(self) -> bool:
        return all(r.read == r.existing for r in self.rows)

    def min_confidence(self) -> float:
        confs = [c for r in self.rows for _i, c in r.eggs]
        return min(confs) if confs else 1.0


def run_validation(seed: int = 42, distractors: int = 5,
                   detector_cfg: DetectorConfig | None = None) -> ValidationReport:
    """10-sample corpus (67 eggs) with distractors, read by the full pipeline."""
    from .detector import run_reading

    cfg = detector_cfg or DetectorConfig()
    params = GeneratorParams(seed=seed)
    rows = []
    for i, count in enumerate(VALIDATION_COUNTS, start=1):
        scene = generate_scene(params, count, distractors,
                               scene_id=f"val-{i:02d}")
        result = run_reading([scene.image] * cfg.snapshots_per_reading, cfg,
                             0.0, reading_seq=i)
        rows.append(ValidationRow(
            sample_id=f"{i:02d}",
            existing=count,
            read=result.egg_count,
            eggs=[(e.egg_id, e.avg_confidence) for e in result.eggs],
        ))
    return ValidationReport(
        rows=rows,
        existing_total=sum(VALIDATION_COUNTS),
        read_total=sum(r.read for r in rows),
    )
