"""Simulated ovitrap device: provisioning, schedules, sensors, battery, RPC.

One SimDevice is a sequential state machine driven by an external scheduler:
the host asks next_wakeup() and calls tick(now); tick returns outbound
messages (immutable values) for the network layer to deliver. No component
reads wall-clock time.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .detector import DetectorConfig, ReadingResult, run_reading, reading_latency
from .detector.reading import CameraContext, default_camera
from .errors import (
    DeviceFaultError,
    InvalidConfigError,
    NotOperatingError,
    UnknownCommandError,
)
from .simclock import ts_round
from .telemetry import LinkKind, Reading, TelemetryEvent, TiltState

PLACE_TYPES = ("home", "business", "public_building", "factory", "field")

SIGNAL_BASE_DBM = {LinkKind.WIFI_MQTT: -55.0, LinkKind.LORAWAN: -97.0}


@dataclass(frozen=True)
class Site:
    address: str
    province: str
    country: str


@dataclass(frozen=True)
class Responsible:
    name: str
    contact: str


@dataclass(frozen=True)
class WifiSettings:
    network: str
    secret: str


@dataclass(frozen=True)
class LorawanSettings:
    app_key: str


@dataclass(frozen=True)
class DeviceConfig:
    device_id: str
    site: Site
    responsible: Responsible
    place_type: str
    installer: str
    gps: tuple                      # (lat, lon)
    link: LinkKind
    wifi: WifiSettings | None = None
    lorawan: LorawanSettings | None = None
    species: str = "Aedes aegypti"
    reading_period_h: float = 6.0
    tx_per_day: int | None = None   # default: 1 for WiFi, 4 for LoRaWAN
    fw_version: str = "1.0.0"

    @property
    def resolved_tx_per_day(self) -> int:
        if self.tx_per_day is not None:
            return self.tx_per_day
        return 1 if self.link is LinkKind.WIFI_MQTT else 4

    @property
    def readings_per_day(self) -> int:
        return int(round(24.0 / self.reading_period_h))


def validate_config(cfg: DeviceConfig) -> None:
    bad = []
    if not cfg.device_id:
        bad.append("device_id")
    if cfg.place_type not in PLACE_TYPES:
        bad.append("place_type")
    if not isinstance(cfg.link, LinkKind):
        bad.append("link")
    elif cfg.link is LinkKind.WIFI_MQTT and cfg.wifi is None:
        bad.append("wifi")
    elif cfg.link is LinkKind.LORAWAN and (
            cfg.lorawan is None or not cfg.lorawan.app_key):
        bad.append("lorawan")
    if cfg.reading_period_h <= 0 or abs(24.0 % cfg.reading_period_h) > 1e-9:
        bad.append("reading_period_h")
    else:
        rpd = cfg.readings_per_day
        tx = cfg.resolved_tx_per_day
        if tx < 1 or rpd % tx != 0 or rpd // tx > 4:
            bad.append("tx_per_day")
    lat, lon = cfg.gps
    if not (-90 <= lat <= 90 and -180 <= lon <= 180):
        bad.append("gps")
    if bad:
        raise InvalidConfigError(bad)


@dataclass(frozen=True)
class PowerModel:
    """Consumption constants; defaults clear the 7-day target with margin."""

    idle_ma: float = 2.0
    reading_ma: float = 300.0
    reading_s: float = 10.0
    wifi_tx_ma: float = 200.0
    wifi_tx_s: float = 5.0
    lora_tx_ma: float = 120.0
    lora_tx_s: float = 3.0
    capacity_mah: float = 10000.0

    def reading_mah(self) -> float:
        return self.reading_ma * self.reading_s / 3600.0

    def tx_mah(self, link: LinkKind) -> float:
        if link is LinkKind.WIFI_MQTT:
            return self.wifi_tx_ma * self.wifi_tx_s / 3600.0
        return self.lora_tx_ma * self.lora_tx_s / 3600.0


def battery_model(cfg: DeviceConfig, power: PowerModel = PowerModel()) -> float:
    """Closed-form projected days of autonomy for the configured schedule."""
    daily = (
        power.idle_ma * 24.0
        + cfg.readings_per_day * power.reading_mah()
        + cfg.resolved_tx_per_day * power.tx_mah(cfg.link)
    )
    return power.capacity_mah / daily


class Phase(Enum):
    UNPROVISIONED = "unprovisioned"
    PROVISIONED = "provisioned"
    OPERATING = "operating"
    FAULT = "fault"


@dataclass
class SensorState:
    tilt: TiltState = TiltState.WELL_POSITIONED
    lid_open: bool = False
    water_present: bool = True
    temperature_c: float = 24.0
    humidity_pct: float = 60.0


@dataclass
class DeviceState:
    phase: Phase = Phase.UNPROVISIONED
    battery_mah: float = 10000.0
    sensors: SensorState = field(default_factory=SensorState)
    pending_readings: list = field(default_factory=list)
    persisted_config: DeviceConfig | None = None    # non-volatile
    persisted_schedule: tuple | None = None         # (tx_per_day, period_h)
    session: object = None
    fault_reason: str | None = None
    reading_seq: int = 0                            # assay counter, non-volatile


@dataclass(frozen=True)
class RpcCommand:
    kind: str                       # read_on_demand | reschedule
    request_id: str
    issued_at: float
    tx_per_day: int | None = None
    reading_period_h: float | None = None

    KINDS = ("read_on_demand", "reschedule")

    def validate(self) -> None:
        if self.kind not in self.KINDS:
            raise UnknownCommandError(f"unknown rpc kind {self.kind!r}")
        if self.kind == "reschedule":
            if not self.tx_per_day or self.tx_per_day < 1:
                raise InvalidConfigError(["tx_per_day"])
            if not self.reading_period_h or self.reading_period_h <= 0:
                raise InvalidConfigError(["reading_period_h"])


@dataclass(frozen=True)
class OutboundMessage:
    kind: str                       # telemetry | alert | test | rpc_response
    emit_at: float
    event: TelemetryEvent | None = None
    rpc: dict | None = None


class SceneSensing:
    """In-device sensing module: holds the current scene, runs readings.

    scene_provider(t) returns the raster under the camera at instant t; a
    static scene simply returns the same array. The optional post hook lets
    experiment scripts inject detection overrides at the result boundary.
    """

    def __init__(
        self,
        cfg: DetectorConfig | None = None,
        scene_provider=None,
        camera: CameraContext | None = None,
        archive_dir=None,
        device_id: str = "dev",
        post=None,
    ):
        self.cfg = cfg or DetectorConfig()
        self.scene_provider = scene_provider
        self.camera = camera or default_camera()
        self.archive_dir = archive_dir
        self.device_id = device_id
        self.post = post

    @property
    def latency_s(self) -> float:
        return reading_latency(self.cfg)

    def read(self, t_start: float, reading_seq: int) -> ReadingResult:
        if self.scene_provider is None:
            image = np.full((self.cfg.image_side, self.cfg.image_side), 0.75)
        else:
            image = self.scene_provider(t_start)
        images = [image] * self.cfg.snapshots_per_reading
        result = run_reading(
            images, self.cfg, t_start,
            reading_seq=reading_seq, camera=self.camera,
            archive_dir=self.archive_dir, device_id=self.device_id,
        )
        if self.post is not None:
            result = self.post(result, t_start)
        return result


class SimDevice:
    """One simulated device; host drives it via next_wakeup()/tick(now)."""

    def __init__(self, sensing: SceneSensing | None = None,
                 power: PowerModel = PowerModel(), log=None):
        self.sensing = sensing or SceneSensing()
        self.power = power
        self.state = DeviceState(battery_mah=power.capacity_mah)
        self.log = log if log is not None else []
        self._actions: list = []
        self._action_seq = itertools.count()
        self._last_tick: float | None = None
        self._paused = False
        self._anchor: float | None = None

    # --- helpers ----------------------------------------------------------

    @property
    def config(self) -> DeviceConfig | None:
        return self.state.persisted_config

    @property
    def device_id(self) -> str:
        return self.config.device_id if self.config else "?"

    def _log(self, now: float, event: str, detail: str = "") -> None:
        self.log.append(f"{now:.3f} {self.device_id} {self.state.phase.value} "
                        f"{event} {detail}".rstrip())

    def _push(self, t: float, name: str, payload=None) -> None:
        heapq.heappush(self._actions, (t, next(self._action_seq), name, payload))

    def _clear_actions(self, names) -> None:
        self._actions = [a for a in self._actions if a[2] not in names]
        heapq.heapify(self._actions)

    def next_wakeup(self) -> float | None:
        return self._actions[0][0] if self._actions else None

    def _batch_size(self) -> int:
        tx_per_day, period_h = self.state.persisted_schedule
        return int(round(24.0 / period_h)) // tx_per_day

    def _period_s(self) -> float:
        return self.state.persisted_schedule[1] * 3600.0

    # --- provisioning -----------------------------------------------------

    def apply_provisioning(self, cfg: DeviceConfig, now: float = 0.0) -> None:
        if self.state.phase not in (Phase.UNPROVISIONED, Phase.PROVISIONED):
            raise InvalidConfigError(
                ["phase"], f"cannot provision while {self.state.phase.value}")
        validate_config(cfg)
        self.state.persisted_config = cfg
        self.state.persisted_schedule = (cfg.resolved_tx_per_day, cfg.reading_period_h)
        self.state.phase = Phase.PROVISIONED
        self.state.session = None
        self._clear_actions({"reading", "reading_done"})
        self._log(now, "provisioned", f"link={cfg.link.value}")

    def reboot(self, now: float = 0.0) -> None:
        """Volatile state is lost; flash (config, schedule, assay counter) survives."""
        self.state.pending_readings = []
        self.state.session = None
        self._actions = []
        self._paused = False
        self._last_tick = None
        if self.state.phase is not Phase.FAULT:
            self.state.phase = (Phase.PROVISIONED if self.state.persisted_config
                                else Phase.UNPROVISIONED)
        self._log(now, "reboot")

    # --- sensors ----------------------------------------------------------

    def set_sensor(self, now: float, **changes) -> list:
        """Apply sensor changes; tilt/lid/water transitions emit alert telemetry."""
        out = []
        s = self.state.sensors
        alertworthy = False
        for name, value in changes.items():
            if not hasattr(s, name):
                raise InvalidConfigError([name], f"unknown sensor {name!r}")
            before = getattr(s, name)
            setattr(s, name, value)
            if name in ("tilt", "lid_open", "water_present") and before != value:
                alertworthy = True
                self._log(now, "sensor", f"{name}={value}")
        if self.state.phase is not Phase.OPERATING:
            return out
        if "tilt" in changes:
            if s.tilt is TiltState.OVERTURNED and not self._paused:
                self._paused = True
                self._clear_actions({"reading", "reading_done"})
                self._log(now, "paused", "overturned")
            elif s.tilt is TiltState.WELL_POSITIONED and self._paused:
                self._paused = False
                self._schedule_next_reading(now)
                self._log(now, "resumed", "tilt reset")
        if alertworthy:
            out.append(self._alert_message(now))
        return out

    # --- schedule machinery -------------------------------------------------

    def _anchor_schedule(self, now: float) -> None:
        self._anchor = now
        self._push(now, "reading", None)

    def _schedule_next_reading(self, now: float) -> None:
        period = self._period_s()
        k = int((now - self._anchor) // period) + 1
        self._push(self._anchor + k * period, "reading", None)

    def tick(self, now: float) -> list:
        """Run all due actions at `now`; returns outbound messages."""
        if self.state.phase not in (Phase.PROVISIONED, Phase.OPERATING):
            return []
        self._drain_battery(now)
        if self.state.phase is Phase.FAULT:
            return []
        if self.state.phase is Phase.PROVISIONED:
            if not self.state.sensors.water_present:
                self._log(now, "hold", "no water at start")
                return []
            self.state.phase = Phase.OPERATING
            self._anchor_schedule(now)
            self._log(now, "operating", "schedule anchored")

        out = []
        while self._actions and self._actions[0][0] <= now + 1e-9:
            t, _seq, name, payload = heapq.heappop(self._actions)
            if name == "reading" and not self._paused:
                self._begin_reading(t)
            elif name == "reading_done":
                out.extend(self._finish_reading(t, payload))
            elif name == "emit":
                out.append(payload)
            if self.state.phase is Phase.FAULT:
                return out if self.state.fault_reason != "battery" else []
        return out

    def _drain_battery(self, now: float) -> None:
        if self._last_tick is None:
            self._last_tick = now
        dt_h = max(0.0, now - self._last_tick) / 3600.0
        self._last_tick = now
        self._debit(self.power.idle_ma * dt_h, now)

    def _debit(self, mah: float, now: float) -> None:
        self.state.battery_mah = max(0.0, self.state.battery_mah - mah)
        if self.state.battery_mah <= 0.0 and self.state.phase is not Phase.FAULT:
            self.state.phase = Phase.FAULT
            self.state.fault_reason = "battery"
            self._actions = []
            self._log(now, "fault", "battery exhausted")

    def _begin_reading(self, t: float) -> None:
        self._debit(self.power.reading_mah(), t)
        if self.state.phase is Phase.FAULT:
            return
        self.state.reading_seq += 1
        result = self.sensing.read(t, self.state.reading_seq)
        self._push(t + self.sensing.latency_s, "reading_done", result)
        self._push(t + self._period_s(), "reading", None)
        self._log(t, "reading_start", f"seq={self.state.reading_seq}")

    def _finish_reading(self, t: float, result: ReadingResult) -> list:
        self.state.pending_readings.append(result)
        self._log(t, "reading_done",
                  f"seq={result.reading_seq} count={result.egg_count}")
        if len(self.state.pending_readings) >= self._batch_size():
            batch = self.state.pending_readings
            self.state.pending_readings = []
            self._debit(self.power.tx_mah(self.config.link), t)
            if self.state.phase is Phase.FAULT:
                return []
            ev = self._make_event(batch, t, "scheduled")
            self._log(t, "tx", f"readings={len(batch)}")
            return [OutboundMessage(kind="telemetry", emit_at=t, event=ev)]
        return []

    # --- event assembly -----------------------------------------------------

    def _signal_dbm(self) -> float:
        base = SIGNAL_BASE_DBM[self.config.link]
        return base + ((self.state.reading_seq % 5) - 2) * 1.5

    def _readings_payload(self, results) -> tuple:
        return tuple(
            Reading(ts=r.timestamp, egg_count=r.egg_count, confidences=r.confidences)
            for r in results
        )

    def _make_event(self, results, now: float, kind: str) -> TelemetryEvent:
        cfg = self.config
        s = self.state.sensors
        readings = self._readings_payload(results)
        if not readings:
            readings = (Reading(ts=ts_round(now), egg_count=0),)
        return TelemetryEvent(
            device_id=cfg.device_id,
            ts=ts_round(now),
            readings=readings,
            temperature_c=s.temperature_c,
            humidity_pct=s.humidity_pct,
            water_present=s.water_present,
            tilt_state=s.tilt,
            lid_open=s.lid_open,
            battery_pct=round(
                100.0 * self.state.battery_mah / self.power.capacity_mah, 2),
            link=cfg.link,
            signal_dbm=self._signal_dbm(),
            gps=cfg.gps,
            camera=self.sensing.camera if cfg.link is LinkKind.WIFI_MQTT else None,
            fw_version=cfg.fw_version,
            kind=kind,
        )

    def _alert_message(self, now: float) -> OutboundMessage:
        recent = self.state.pending_readings[-1:] if self.state.pending_readings else []
        ev = self._make_event(recent, now, "alert")
        self._log(now, "alert",
                  f"tilt={ev.tilt_state.value} water={ev.water_present} "
                  f"lid={ev.lid_open}")
        return OutboundMessage(kind="alert", emit_at=now, event=ev)

    def local_test_read(self, now: float):
        """Calibration read over the local control channel (installer flow).

        Allowed as soon as the device is provisioned; does not disturb the
        operating schedule. Returns (ReadingResult, follow-up messages).
        """
        if self.state.phase not in (Phase.PROVISIONED, Phase.OPERATING):
            raise DeviceFaultError(
                f"device {self.device_id} is {self.state.phase.value}")
        self._drain_battery(now)
        self._debit(self.power.reading_mah(), now)
        if self.state.phase is Phase.FAULT:
            raise DeviceFaultError("battery exhausted during test read")
        self.state.reading_seq += 1
        result = self.sensing.read(now, self.state.reading_seq)
        done = now + self.sensing.latency_s
        follow_up = OutboundMessage(
            kind="test", emit_at=done + 2.0,
            event=self._make_event([result], done + 2.0, "test"))
        self._debit(self.power.tx_mah(self.config.link), now)
        self._log(now, "test_read",
                  f"assay={self.state.reading_seq} count={result.egg_count}")
        return result, [follow_up]

    # --- RPC ----------------------------------------------------------------

    def handle_rpc(self, cmd: RpcCommand, now: float) -> list:
        if self.state.phase is not Phase.OPERATING:
            raise NotOperatingError(
                f"device {self.device_id} is {self.state.phase.value}")
        cmd.validate()
        self._log(now, "rpc", f"{cmd.kind} id={cmd.request_id}")
        if cmd.kind == "read_on_demand":
            self._debit(self.power.reading_mah(), now)
            if self.state.phase is Phase.FAULT:
                return []
            self.state.reading_seq += 1
            result = self.sensing.read(now, self.state.reading_seq)
            done = now + self.sensing.latency_s
            response = OutboundMessage(
                kind="rpc_response", emit_at=done,
                rpc={
                    "request_id": cmd.request_id,
                    "egg_count": result.egg_count,
                    "ts": result.timestamp,
                    "assay_id": result.reading_seq,
                },
            )
            follow_up = OutboundMessage(
                kind="test", emit_at=done + 2.0,
                event=self._make_event([result], done + 2.0, "test"),
            )
            self._debit(self.power.tx_mah(self.config.link), now)
            return [response, follow_up]
        # reschedule
        cfg = replace(self.config, tx_per_day=cmd.tx_per_day,
                      reading_period_h=cmd.reading_period_h)
        validate_config(cfg)
        self.state.persisted_config = cfg
        self.state.persisted_schedule = (cfg.resolved_tx_per_day, cfg.reading_period_h)
        self._clear_actions({"reading"})
        self._anchor = now
        self._push(now + self._period_s(), "reading", None)
        self._log(now, "reschedule",
                  f"tx_per_day={cmd.tx_per_day} period_h={cmd.reading_period_h}")
        return [OutboundMessage(
            kind="rpc_response", emit_at=now,
            rpc={"request_id": cmd.request_id, "ok": True},
        )]
