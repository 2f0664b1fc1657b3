"""Provisioner: the installer's tool, driving one bench device at a time.

The mobile app's BLE control channel is modeled as in-process calls against a
persisted "bench": a directory holding simulated device state. Registration
always goes through the platform REST API (embedded ASGI client by default,
or a remote base URL).
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .detector import DetectorConfig
from .device import (
    DeviceConfig,
    LorawanSettings,
    Phase,
    Responsible,
    SceneSensing,
    SimDevice,
    Site,
    WifiSettings,
    validate_config,
)
from .errors import (
    DeviceFaultError,
    DuplicateDeviceError,
    InvalidConfigError,
    ProvisioningValidationError,
    UnreachableDeviceError,
)
from .netsim import LinkProfile
from .simclock import iso_utc
from .synthgen import GeneratorParams, generate_scene
from .telemetry import LinkKind, TiltState
from .world import World, record_from_config

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

GPS_SOURCES = ("manual", "scenario-file")


@dataclass
class SceneSpec:
    seed: int = 1
    eggs: int = 0
    distractors: int = 0


@dataclass
class ProvisioningForm:
    config: DeviceConfig
    gps_source: str = "manual"
    scene: SceneSpec = field(default_factory=SceneSpec)


def form_from_toml(path) -> ProvisioningForm:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    d = doc.get("device", {})
    link_name = d.get("link", "wifi_mqtt")
    try:
        link = LinkKind(link_name)
    except ValueError:
        raise ProvisioningValidationError([f"device.link={link_name!r}"])
    wifi = lorawan = None
    if link is LinkKind.WIFI_MQTT:
        wifi = WifiSettings(d.get("wifi_network", ""), d.get("wifi_secret", ""))
    else:
        lorawan = LorawanSettings(d.get("lora_app_key", ""))
    cfg = DeviceConfig(
        device_id=d.get("id", ""),
        site=Site(d.get("address", ""), d.get("province", ""), d.get("country", "")),
        responsible=Responsible(d.get("responsible_name", ""),
                                d.get("responsible_contact", "")),
        place_type=d.get("place_type", ""),
        installer=d.get("installer", ""),
        gps=(float(d.get("lat", 0.0)), float(d.get("lon", 0.0))),
        link=link,
        wifi=wifi,
        lorawan=lorawan,
        reading_period_h=float(d.get("reading_period_h", 6.0)),
        tx_per_day=d.get("tx_per_day"),
        fw_version=d.get("fw_version", "1.0.0"),
    )
    s = doc.get("scene", {})
    return ProvisioningForm(
        config=cfg,
        gps_source=d.get("gps_source", "manual"),
        scene=SceneSpec(seed=int(s.get("seed", 1)), eggs=int(s.get("eggs", 0)),
                        distractors=int(s.get("distractors", 0))),
    )


def validate_form(form: ProvisioningForm) -> list:
    """Field names that fail validation; empty means the form is complete."""
    bad = []
    try:
        validate_config(form.config)
    except InvalidConfigError as exc:
        bad.extend(exc.fields)
    if form.config.link is LinkKind.WIFI_MQTT and form.config.wifi is not None:
        if not form.config.wifi.network:
            bad.append("wifi.network")
        if not form.config.wifi.secret:
            bad.append("wifi.secret")
    if form.gps_source not in GPS_SOURCES:
        bad.append("gps_source")
    if form.scene.eggs < 0 or form.scene.distractors < 0:
        bad.append("scene")
    return bad


# --- bench persistence ---------------------------------------------------------

def config_to_dict(cfg: DeviceConfig) -> dict:
    d = asdict(cfg)
    d["link"] = cfg.link.value
    return d


def config_from_dict(d: dict) -> DeviceConfig:
    return DeviceConfig(
        device_id=d["device_id"],
        site=Site(**d["site"]),
        responsible=Responsible(**d["responsible"]),
        place_type=d["place_type"],
        installer=d["installer"],
        gps=tuple(d["gps"]),
        link=LinkKind(d["link"]),
        wifi=WifiSettings(**d["wifi"]) if d.get("wifi") else None,
        lorawan=LorawanSettings(**d["lorawan"]) if d.get("lorawan") else None,
        species=d.get("species", "Aedes aegypti"),
        reading_period_h=d.get("reading_period_h", 6.0),
        tx_per_day=d.get("tx_per_day"),
        fw_version=d.get("fw_version", "1.0.0"),
    )


class Bench:
    """Directory-backed store of simulated devices plus the local registry."""

    def __init__(self, root):
        self.root = Path(root)
        self.devices_dir = self.root / "devices"
        self.registry_path = self.root / "registry.json"

    def _device_path(self, device_id: str) -> Path:
        return self.devices_dir / f"{device_id}.json"

    def exists(self, device_id: str) -> bool:
        return self._device_path(device_id).exists()

    def load(self, device_id: str) -> dict:
        path = self._device_path(device_id)
        if not path.exists():
            raise UnreachableDeviceError(
                f"device {device_id!r} is not on the bench at {self.root}")
        return json.loads(path.read_text())

    def save(self, device_id: str, doc: dict) -> None:
        self.devices_dir.mkdir(parents=True, exist_ok=True)
        self._device_path(device_id).write_text(json.dumps(doc, indent=1) + "\n")

    def load_registry(self) -> dict:
        if self.registry_path.exists():
            return json.loads(self.registry_path.read_text())
        return {}

    def save_registry(self, registry: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.registry_path.write_text(json.dumps(registry, indent=1) + "\n")


def _rehydrate(doc: dict, archive_dir=None) -> SimDevice:
    cfg = config_from_dict(doc["config"])
    scene_spec = SceneSpec(**doc.get("scene", {}))
    params = GeneratorParams(seed=scene_spec.seed)
    scene = generate_scene(params, scene_spec.eggs, scene_spec.distractors,
                           scene_id=f"{cfg.device_id}-bench")
    sensing = SceneSensing(cfg=DetectorConfig(),
                           scene_provider=lambda t: scene.image,
                           device_id=cfg.device_id, archive_dir=archive_dir)
    device = SimDevice(sensing=sensing)
    state = doc.get("state", {})
    device.apply_provisioning(cfg, now=doc.get("sim_time", 0.0))
    device.state.battery_mah = state.get("battery_mah", device.state.battery_mah)
    device.state.reading_seq = state.get("reading_seq", 0)
    sensors = state.get("sensors", {})
    if sensors:
        device.state.sensors.tilt = TiltState(sensors.get("tilt", "well_positioned"))
        device.state.sensors.lid_open = sensors.get("lid_open", False)
        device.state.sensors.water_present = sensors.get("water_present", True)
        device.state.sensors.temperature_c = sensors.get("temperature_c", 24.0)
        device.state.sensors.humidity_pct = sensors.get("humidity_pct", 60.0)
    return device


def _dehydrate(device: SimDevice, scene: SceneSpec, sim_time: float) -> dict:
    s = device.state.sensors
    return {
        "config": config_to_dict(device.config),
        "state": {
            "phase": device.state.phase.value,
            "battery_mah": device.state.battery_mah,
            "reading_seq": device.state.reading_seq,
            "sensors": {
                "tilt": s.tilt.value,
                "lid_open": s.lid_open,
                "water_present": s.water_present,
                "temperature_c": s.temperature_c,
                "humidity_pct": s.humidity_pct,
            },
        },
        "scene": asdict(scene),
        "sim_time": sim_time,
    }


# --- operations ------------------------------------------------------------------

@dataclass
class ProvisionOutcome:
    device_id: str
    registered: bool
    reprovisioned: bool


@dataclass
class TestReadOutcome:
    egg_count: int
    timestamp: str
    assay_id: int
    transmitted: bool
    warnings: list


def provision(form: ProvisioningForm, bench: Bench, client) -> ProvisionOutcome:
    """Push config to the bench device, then register it via platform REST."""
    bad = validate_form(form)
    if bad:
        raise ProvisioningValidationError(bad)
    device_id = form.config.device_id
    reprovisioned = bench.exists(device_id)
    sim_time = 0.0
    if reprovisioned:
        doc = bench.load(device_id)
        device = _rehydrate(doc)
        sim_time = doc.get("sim_time", 0.0)
    else:
        sensing = SceneSensing(cfg=DetectorConfig(), device_id=device_id)
        device = SimDevice(sensing=sensing)
    device.apply_provisioning(form.config, now=sim_time)

    record = record_from_config(form.config)
    resp = client.post("/devices", json=record.public())
    if resp.status_code == 409:
        raise DuplicateDeviceError(resp.json().get("detail", "registry conflict"))
    resp.raise_for_status()

    bench.save(device_id, _dehydrate(device, form.scene, sim_time))
    registry = bench.load_registry()        # local cache of the registry
    registry[device_id] = record.public()
    bench.save_registry(registry)
    return ProvisionOutcome(device_id=device_id, registered=True,
                            reprovisioned=reprovisioned)


def test_reading(device_id: str, bench: Bench, registry: dict | None = None,
                 archive_dir=None) -> TestReadOutcome:
    """On-demand calibration read over the local control channel.

    Runs a private mini-world so the follow-up telemetry actually traverses
    the configured link into an (embedded) platform instance.
    """
    doc = bench.load(device_id)
    device = _rehydrate(doc, archive_dir=archive_dir)
    if device.state.phase not in (Phase.PROVISIONED, Phase.OPERATING):
        raise DeviceFaultError(f"device {device_id} is {device.state.phase.value}")

    sim_time = float(doc.get("sim_time", 0.0))
    world = World(start_ts=sim_time, seed=doc.get("scene", {}).get("seed", 1),
                  wifi_profile=LinkProfile.wifi(), lora_profile=LinkProfile.lorawan())
    for rec_doc in (registry or bench.load_registry()).values():
        from .rest import _record_from_doc
        try:
            world.service.register_device(_record_from_doc(rec_doc))
        except DuplicateDeviceError:
            pass
    host = world.add_device(device, register=False)
    if device.config.link is LinkKind.LORAWAN:
        world.join_server.request_join(device_id, device.config.lorawan.app_key,
                                       device.state.reading_seq + 1, sim_time)

    result, messages = device.local_test_read(sim_time)
    for msg in messages:
        host.dispatch(msg)
    world.run_until(sim_time + device.sensing.latency_s + 30.0)

    warnings = []
    if device.state.sensors.lid_open:
        warnings.append("lid open during reading")
    if not device.state.sensors.water_present:
        warnings.append("no water in recipient")
    transmitted = world.service.ingest_count > 0

    doc = _dehydrate(device, SceneSpec(**doc.get("scene", {})),
                     world.scheduler.now)
    bench.save(device_id, doc)
    return TestReadOutcome(
        egg_count=result.egg_count,
        timestamp=iso_utc(result.timestamp),
        assay_id=result.reading_seq,
        transmitted=transmitted,
        warnings=warnings,
    )


def device_status(device_id: str, bench: Bench) -> dict:
    doc = bench.load(device_id)
    return {
        "device_id": device_id,
        "phase": doc["state"]["phase"],
        "battery_mah": doc["state"]["battery_mah"],
        "assays": doc["state"]["reading_seq"],
        "link": doc["config"]["link"],
        "scene": doc.get("scene", {}),
        "sim_time": iso_utc(doc.get("sim_time", 0.0)),
        "sensors": doc["state"]["sensors"],
    }
