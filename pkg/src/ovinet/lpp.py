"""Cayenne-LPP byte codec for the LoRaWAN path.

Frames are a concatenation of channel/type/fixed-width-data records. The
channel map below is the package's fixed assignment of telemetry quantities
to channels; total width of a full event is 43 bytes, well inside the
110-byte budget the device targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .errors import (
    DuplicateChannelError,
    LppRangeError,
    TooManyReadingsError,
    TruncatedFrameError,
    UnknownTypeError,
)
from .telemetry import LinkKind, Reading, TelemetryEvent, TiltState

TYPE_DIGITAL_IN = 0x00   # 1 byte unsigned
TYPE_ANALOG_IN = 0x02    # 2 bytes signed, 0.01 resolution
TYPE_TEMPERATURE = 0x67  # 2 bytes signed, 0.1 degC resolution
TYPE_HUMIDITY = 0x68     # 1 byte unsigned, 0.5 %RH resolution
TYPE_GPS = 0x88          # 3x3 bytes signed: lat/lon 1e-4 deg, alt 0.01 m

TYPE_WIDTHS = {
    TYPE_DIGITAL_IN: 1,
    TYPE_ANALOG_IN: 2,
    TYPE_TEMPERATURE: 2,
    TYPE_HUMIDITY: 1,
    TYPE_GPS: 9,
}

# AU915 payload bounds; enforced on the transmission path, not by the codec.
MIN_FRAME_BYTES = 11
MAX_FRAME_BYTES = 242
EVENT_BUDGET_BYTES = 110


@dataclass(frozen=True)
class LppRecord:
    channel: int
    lpp_type: int
    data: bytes

    def __post_init__(self):
        if self.lpp_type not in TYPE_WIDTHS:
            raise UnknownTypeError(f"unknown LPP type 0x{self.lpp_type:02x}")
        if len(self.data) != TYPE_WIDTHS[self.lpp_type]:
            raise LppRangeError(
                f"type 0x{self.lpp_type:02x} needs {TYPE_WIDTHS[self.lpp_type]} "
                f"data bytes, got {len(self.data)}"
            )
        if not (0 <= self.channel <= 255):
            raise LppRangeError(f"channel {self.channel} outside one byte")

    def encode(self) -> bytes:
        return bytes((self.channel, self.lpp_type)) + self.data


@dataclass
class LppFrame:
    records: list = field(default_factory=list)

    @property
    def bytes(self) -> bytes:
        return b"".join(r.encode() for r in self.records)

    def __len__(self) -> int:
        return len(self.bytes)


@dataclass(frozen=True)
class ChannelMap:
    """Fixed channel -> quantity assignment (bijective)."""

    temperature: int = 1   # 0x67
    humidity: int = 2      # 0x68
    water: int = 3         # 0x00 digital, 1 = water present
    tilt: int = 4          # 0x00 digital, 1 = overturned
    lid: int = 5           # 0x00 digital, 1 = open
    battery: int = 6       # 0x02 analog, percent
    egg_count: int = 7     # 0x02 analog
    signal: int = 8        # 0x02 analog, dBm
    gps: int = 9           # 0x88
    fw_tag: int = 10       # 0x02 analog, major.minorpatch

    def __post_init__(self):
        values = [getattr(self, f.name) for f in fields(self)]
        if len(set(values)) != len(values):
            raise DuplicateChannelError("channel map must be bijective")

    def quantity_of(self, channel: int):
        for f in fields(self):
            if getattr(self, f.name) == channel:
                return f.name
        return None


DEFAULT_CHANNEL_MAP = ChannelMap()


def _signed(value: float, scale: float, width: int, what: str) -> bytes:
    raw = round(value / scale)
    lo = -(1 << (8 * width - 1))
    hi = (1 << (8 * width - 1)) - 1
    if not (lo <= raw <= hi):
        raise LppRangeError(f"{what}={value} outside representable range")
    return int(raw).to_bytes(width, "big", signed=True)


def _unsigned(value: float, scale: float, width: int, what: str) -> bytes:
    raw = round(value / scale)
    if not (0 <= raw < (1 << (8 * width))):
        raise LppRangeError(f"{what}={value} outside representable range")
    return int(raw).to_bytes(width, "big", signed=False)


def fw_version_tag(fw_version: str) -> float:
    """Numeric tag for a 'major.minor.patch' string: major + minor/10 + patch/100."""
    parts = (fw_version.split(".") + ["0", "0"])[:3]
    try:
        major, minor, patch = (int(p) for p in parts)
    except ValueError as exc:
        raise LppRangeError(f"fw_version {fw_version!r} is not numeric") from exc
    if minor > 9 or patch > 9 or major > 300 or min(major, minor, patch) < 0:
        raise LppRangeError(f"fw_version {fw_version!r} does not fit the tag scheme")
    return major + minor / 10 + patch / 100


def encode_lpp(ev: TelemetryEvent, cmap: ChannelMap = DEFAULT_CHANNEL_MAP) -> LppFrame:
    """Encode the event's single reading plus sensor state as an LPP frame."""
    if len(ev.readings) != 1:
        raise TooManyReadingsError(
            f"LoRaWAN uplinks carry exactly one reading, got {len(ev.readings)}"
        )
    reading = ev.readings[0]
    lat, lon = ev.gps
    records = [
        LppRecord(cmap.temperature, TYPE_TEMPERATURE,
                  _signed(ev.temperature_c, 0.1, 2, "temperature_c")),
        LppRecord(cmap.humidity, TYPE_HUMIDITY,
                  _unsigned(ev.humidity_pct, 0.5, 1, "humidity_pct")),
        LppRecord(cmap.water, TYPE_DIGITAL_IN,
                  bytes((1 if ev.water_present else 0,))),
        LppRecord(cmap.tilt, TYPE_DIGITAL_IN,
                  bytes((1 if ev.tilt_state is TiltState.OVERTURNED else 0,))),
        LppRecord(cmap.lid, TYPE_DIGITAL_IN,
                  bytes((1 if ev.lid_open else 0,))),
        LppRecord(cmap.battery, TYPE_ANALOG_IN,
                  _signed(ev.battery_pct, 0.01, 2, "battery_pct")),
        LppRecord(cmap.egg_count, TYPE_ANALOG_IN,
                  _signed(float(reading.egg_count), 0.01, 2, "egg_count")),
        LppRecord(cmap.signal, TYPE_ANALOG_IN,
                  _signed(ev.signal_dbm, 0.01, 2, "signal_dbm")),
        LppRecord(cmap.gps, TYPE_GPS,
                  _signed(lat, 1e-4, 3, "lat") + _signed(lon, 1e-4, 3, "lon")
                  + _signed(0.0, 0.01, 3, "alt")),
        LppRecord(cmap.fw_tag, TYPE_ANALOG_IN,
                  _signed(fw_version_tag(ev.fw_version), 0.01, 2, "fw_tag")),
    ]
    return LppFrame(records)


@dataclass
class DecodedTelemetry:
    """Quantities recovered from an LPP frame; None where absent."""

    temperature_c: float | None = None
    humidity_pct: float | None = None
    water_present: bool | None = None
    tilt_state: TiltState | None = None
    lid_open: bool | None = None
    battery_pct: float | None = None
    egg_count: int | None = None
    signal_dbm: float | None = None
    gps: tuple | None = None
    fw_tag: float | None = None
    extras: dict = field(default_factory=dict)

    def as_event(self, device_id: str, ts: float) -> TelemetryEvent:
        """Partial TelemetryEvent for platform ingestion (gateway receipt time)."""
        return TelemetryEvent(
            device_id=device_id,
            ts=ts,
            readings=(Reading(ts=ts, egg_count=self.egg_count or 0),),
            temperature_c=self.temperature_c if self.temperature_c is not None else 0.0,
            humidity_pct=self.humidity_pct if self.humidity_pct is not None else 0.0,
            water_present=bool(self.water_present),
            tilt_state=self.tilt_state or TiltState.WELL_POSITIONED,
            lid_open=bool(self.lid_open),
            battery_pct=self.battery_pct if self.battery_pct is not None else 0.0,
            link=LinkKind.LORAWAN,
            signal_dbm=self.signal_dbm if self.signal_dbm is not None else 0.0,
            gps=self.gps or (0.0, 0.0),
            camera=None,
            fw_version=f"{self.fw_tag:.2f}" if self.fw_tag is not None else "",
        )


def _read_signed(data: bytes, scale: float) -> float:
    return int.from_bytes(data, "big", signed=True) * scale


def decode_lpp(frame: bytes, cmap: ChannelMap = DEFAULT_CHANNEL_MAP) -> DecodedTelemetry:
    """Parse a frame back into quantities; never crashes on junk input."""
    if len(frame) < 3:
        raise TruncatedFrameError(f"frame of {len(frame)} bytes has no complete record")
    out = DecodedTelemetry()
    seen: set = set()
    pos = 0
    n = len(frame)
    while pos < n:
        if n - pos < 2:
            raise TruncatedFrameError("dangling bytes after last record")
        channel, lpp_type = frame[pos], frame[pos + 1]
        width = TYPE_WIDTHS.get(lpp_type)
        if width is None:
            raise UnknownTypeError(f"unknown LPP type 0x{lpp_type:02x} at offset {pos}")
        if n - pos - 2 < width:
            raise TruncatedFrameError(
                f"record at offset {pos} truncated: needs {width} data bytes"
            )
        if (channel, lpp_type) in seen:
            raise DuplicateChannelError(
                f"channel {channel} repeated for type 0x{lpp_type:02x}"
            )
        seen.add((channel, lpp_type))
        data = frame[pos + 2:pos + 2 + width]
        pos += 2 + width

        quantity = cmap.quantity_of(channel)
        if quantity == "temperature" and lpp_type == TYPE_TEMPERATURE:
            out.temperature_c = _read_signed(data, 0.1)
        elif quantity == "humidity" and lpp_type == TYPE_HUMIDITY:
            out.humidity_pct = data[0] * 0.5
        elif quantity == "water" and lpp_type == TYPE_DIGITAL_IN:
            out.water_present = bool(data[0])
        elif quantity == "tilt" and lpp_type == TYPE_DIGITAL_IN:
            out.tilt_state = TiltState.OVERTURNED if data[0] else TiltState.WELL_POSITIONED
        elif quantity == "lid" and lpp_type == TYPE_DIGITAL_IN:
            out.lid_open = bool(data[0])
        elif quantity == "battery" and lpp_type == TYPE_ANALOG_IN:
            out.battery_pct = _read_signed(data, 0.01)
        elif quantity == "egg_count" and lpp_type == TYPE_ANALOG_IN:
            out.egg_count = int(round(_read_signed(data, 0.01)))
        elif quantity == "signal" and lpp_type == TYPE_ANALOG_IN:
            out.signal_dbm = _read_signed(data, 0.01)
        elif quantity == "gps" and lpp_type == TYPE_GPS:
            out.gps = (_read_signed(data[0:3], 1e-4), _read_signed(data[3:6], 1e-4))
        elif quantity == "fw_tag" and lpp_type == TYPE_ANALOG_IN:
            out.fw_tag = _read_signed(data, 0.01)
        else:
            out.extras[(channel, lpp_type)] = data
    return out
