"""Canonical device->platform telemetry event and its JSON wire form.

The JSON document is the WiFi-path encoding; key order is fixed so golden
tests can compare bytes. LoRaWAN uses the byte codec in ovinet.lpp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .detector.reading import CameraContext
from .errors import TelemetryValidationError
from .simclock import iso_utc, parse_instant


class TiltState(str, Enum):
    WELL_POSITIONED = "well_positioned"
    OVERTURNED = "overturned"


class LinkKind(str, Enum):
    WIFI_MQTT = "wifi_mqtt"
    LORAWAN = "lorawan"


@dataclass(frozen=True)
class Reading:
    ts: float
    egg_count: int
    confidences: tuple = ()


@dataclass(frozen=True)
class TelemetryEvent:
    device_id: str
    ts: float
    readings: tuple                      # 1..4 Reading, ts strictly increasing
    temperature_c: float
    humidity_pct: float
    water_present: bool
    tilt_state: TiltState
    lid_open: bool
    battery_pct: float
    link: LinkKind
    signal_dbm: float
    gps: tuple                           # (lat, lon) degrees
    camera: CameraContext | None = None
    fw_version: str = "1.0.0"
    kind: str = "scheduled"              # scheduled | alert | test

    @property
    def latest_reading(self) -> Reading:
        return self.readings[-1]


def validate_event(ev: TelemetryEvent) -> list:
    """Collect invariant violations; empty list means valid."""
    v = []
    if not ev.device_id:
        v.append("device_id empty")
    if not (1 <= len(ev.readings) <= 4):
        v.append(f"readings count {len(ev.readings)} outside 1..4")
    for prev, cur in zip(ev.readings, ev.readings[1:]):
        if cur.ts <= prev.ts:
            v.append("reading timestamps not strictly increasing")
            break
    for r in ev.readings:
        if r.egg_count < 0:
            v.append("negative egg_count")
        if r.confidences and len(r.confidences) != r.egg_count:
            v.append("confidences length != egg_count")
        if any(not (0.0 <= c <= 1.0) for c in r.confidences):
            v.append("confidence outside [0,1]")
    if not isinstance(ev.tilt_state, TiltState):
        v.append("tilt_state not a TiltState")
    if not isinstance(ev.link, LinkKind):
        v.append("link not a LinkKind")
    if not (0.0 <= ev.humidity_pct <= 100.0):
        v.append("humidity_pct outside [0,100]")
    if not (0.0 <= ev.battery_pct <= 100.0):
        v.append("battery_pct outside [0,100]")
    lat, lon = ev.gps
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        v.append("gps out of range")
    return v


def encode_json(ev: TelemetryEvent) -> str:
    """Fixed-key-order JSON document for the WiFi-MQTT path."""
    violations = validate_event(ev)
    if violations:
        raise TelemetryValidationError(violations)
    doc = {
        "device_id": ev.device_id,
        "ts": iso_utc(ev.ts),
        "readings": [
            {
                "ts": iso_utc(r.ts),
                "egg_count": r.egg_count,
                "confidences": list(r.confidences),
            }
            for r in ev.readings
        ],
        "temp_c": ev.temperature_c,
        "hum_pct": ev.humidity_pct,
        "water": ev.water_present,
        "tilt": ev.tilt_state.value,
        "lid_open": ev.lid_open,
        "battery_pct": ev.battery_pct,
        "link": ev.link.value,
        "rssi_dbm": ev.signal_dbm,
        "gps": {"lat": ev.gps[0], "lon": ev.gps[1]},
        "camera": None if ev.camera is None else {
            "sensor": ev.camera.sensor_model,
            "hw": ev.camera.hw_version,
            "fw": ev.camera.fw_version,
            "hal": ev.camera.hal_version,
            "os": ev.camera.os_version,
            "frame_size": ev.camera.frame_size,
            "pixformat": ev.camera.pixformat,
        },
        "fw_version": ev.fw_version,
        "kind": ev.kind,
    }
    return json.dumps(doc, separators=(",", ":"))


def decode_json(text: str) -> TelemetryEvent:
    doc = json.loads(text)
    cam = doc.get("camera")
    ev = TelemetryEvent(
        device_id=doc["device_id"],
        ts=parse_instant(doc["ts"]),
        readings=tuple(
            Reading(
                ts=parse_instant(r["ts"]),
                egg_count=int(r["egg_count"]),
                confidences=tuple(r.get("confidences", ())),
            )
            for r in doc["readings"]
        ),
        temperature_c=float(doc["temp_c"]),
        humidity_pct=float(doc["hum_pct"]),
        water_present=bool(doc["water"]),
        tilt_state=TiltState(doc["tilt"]),
        lid_open=bool(doc["lid_open"]),
        battery_pct=float(doc["battery_pct"]),
        link=LinkKind(doc["link"]),
        signal_dbm=float(doc["rssi_dbm"]),
        gps=(float(doc["gps"]["lat"]), float(doc["gps"]["lon"])),
        camera=None if cam is None else CameraContext(
            sensor_model=cam["sensor"],
            hw_version=cam["hw"],
            fw_version=cam["fw"],
            hal_version=cam["hal"],
            os_version=cam["os"],
            frame_size=cam["frame_size"],
            pixformat=cam["pixformat"],
        ),
        fw_version=doc["fw_version"],
        kind=doc.get("kind", "scheduled"),
    )
    violations = validate_event(ev)
    if violations:
        raise TelemetryValidationError(violations)
    return ev
