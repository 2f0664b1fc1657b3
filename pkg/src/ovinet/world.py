"""Wiring of devices, transports and the platform over one event scheduler.

A World owns the virtual clock; DeviceHost adapts a SimDevice's message-based
interface onto the broker (WiFi) or gateway (LoRaWAN) and keeps the device's
next wakeup scheduled.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict

from .device import DeviceConfig, Phase, RpcCommand, SimDevice
from .errors import DeviceFaultError, UnknownDeviceError
from .lpp import encode_lpp
from .netsim import (
    JoinServer,
    LinkProfile,
    LoraGateway,
    Middleware,
    MqttBroker,
    PORT_RPC_RESPONSE,
    PORT_TELEMETRY,
    TraceLog,
    WifiAdapter,
    decode_downlink,
    encode_downlink,
    encode_rpc_response_frame,
)
from .service import DeviceRecord, PlatformConfig, PlatformService
from .simclock import Scheduler, iso_utc
from .telemetry import LinkKind, encode_json


def record_from_config(cfg: DeviceConfig) -> DeviceRecord:
    return DeviceRecord(
        device_id=cfg.device_id,
        site=asdict(cfg.site),
        responsible=asdict(cfg.responsible),
        place_type=cfg.place_type,
        installer=cfg.installer,
        species=cfg.species,
        gps=tuple(cfg.gps),
        link=cfg.link.value,
        fw_version=cfg.fw_version,
    )


class DeviceHost:
    """Drives one device from the scheduler and routes its messages."""

    def __init__(self, world: "World", device: SimDevice):
        self.world = world
        self.device = device
        self._wakeup_handle = None
        self._join_nonce = 0
        device_id = device.device_id
        if device.config.link is LinkKind.WIFI_MQTT:
            world.broker.connect(device_id)
            world.broker.subscribe(
                device_id, f"v1/devices/{device_id}/rpc/request",
                self._on_wifi_rpc)
        else:
            world.gateway.register_downlink_handler(device_id, self._on_downlink)

    # --- lifecycle ----------------------------------------------------------

    def activate(self, t: float | None = None) -> None:
        at = self.world.scheduler.now if t is None else t
        self.world.scheduler.at(at, self._boot)

    def _boot(self) -> None:
        device = self.device
        if device.config.link is LinkKind.LORAWAN:
            self._join_nonce += 1
            session = self.world.join_server.request_join(
                device.device_id, device.config.lorawan.app_key,
                self._join_nonce, self.world.scheduler.now)
            device.state.session = session
        self.on_wakeup()

    def on_wakeup(self) -> None:
        now = self.world.scheduler.now
        self._wakeup_handle = None
        messages = self.device.tick(now)
        for msg in messages:
            self.dispatch(msg)
        self.ensure_wakeup()

    def ensure_wakeup(self) -> None:
        nw = self.device.next_wakeup()
        if nw is None:
            return
        if self._wakeup_handle is not None:
            self.world.scheduler.cancel(self._wakeup_handle)
        self._wakeup_handle = self.world.scheduler.at(nw, self.on_wakeup)

    # --- outbound -----------------------------------------------------------

    def dispatch(self, msg) -> None:
        if msg.emit_at > self.world.scheduler.now + 1e-9:
            self.world.scheduler.at(msg.emit_at, self._send, msg)
        else:
            self._send(msg)

    def _send(self, msg) -> None:
        device = self.device
        device_id = device.device_id
        link = device.config.link
        if msg.kind in ("telemetry", "alert", "test"):
            if link is LinkKind.WIFI_MQTT:
                self.world.broker.publish(
                    device_id, f"v1/devices/{device_id}/telemetry",
                    encode_json(msg.event))
            else:
                frame = encode_lpp(msg.event)
                self.world.gateway.uplink(device_id, PORT_TELEMETRY, frame.bytes)
        elif msg.kind == "rpc_response":
            if link is LinkKind.WIFI_MQTT:
                self.world.broker.publish(
                    device_id, f"v1/devices/{device_id}/rpc/response",
                    json.dumps(msg.rpc))
            elif "egg_count" in msg.rpc:
                # reschedule acks resolve at downlink delivery; only on-demand
                # read results travel back on the response port
                self.world.gateway.uplink(
                    device_id, PORT_RPC_RESPONSE,
                    encode_rpc_response_frame(
                        0x01, msg.rpc.get("egg_count", 0),
                        msg.rpc.get("assay_id", 0)))

    # --- inbound RPC ----------------------------------------------------------

    def _on_wifi_rpc(self, topic: str, payload: str, t: float) -> None:
        doc = json.loads(payload)
        request_id = doc.get("request_id", "")
        self.world.service.mark_rpc_delivered(request_id, t)
        cmd = RpcCommand(
            kind=doc.get("kind", ""), request_id=request_id, issued_at=t,
            tx_per_day=doc.get("tx_per_day"),
            reading_period_h=doc.get("reading_period_h"))
        self._handle(cmd, t)

    def _on_downlink(self, data: bytes, t: float) -> None:
        fields = decode_downlink(data)
        request_id = self.world.middleware.inflight_rpc(self.device.device_id) or ""
        self.world.service.mark_rpc_delivered(request_id, t)
        cmd = RpcCommand(kind=fields["kind"], request_id=request_id, issued_at=t,
                         tx_per_day=fields.get("tx_per_day"),
                         reading_period_h=fields.get("reading_period_h"))
        self._handle(cmd, t)
        if fields["kind"] == "reschedule" and request_id:
            # LoRa has no dedicated ack uplink; the schedule change takes
            # effect locally and the request resolves as answered on delivery.
            self.world.middleware.resolve_rpc(self.device.device_id)
            self.world.service.mark_rpc_answered(request_id, {"ok": True}, t)

    def _handle(self, cmd: RpcCommand, t: float) -> None:
        try:
            messages = self.device.handle_rpc(cmd, t)
        except Exception as exc:
            self.world.trace.record(t, "device", "rpc_error",
                                    device=self.device.device_id,
                                    error=type(exc).__name__)
            self.world.service.mark_rpc_failed(cmd.request_id, t)
            return
        for msg in messages:
            self.dispatch(msg)
        self.ensure_wakeup()

    # --- sensors ---------------------------------------------------------------

    def apply_sensor(self, **changes) -> None:
        now = self.world.scheduler.now
        for msg in self.device.set_sensor(now, **changes):
            self.dispatch(msg)
        self.ensure_wakeup()


class World:
    """One simulated deployment: scheduler + transports + platform + devices."""

    def __init__(self, start_ts: float = 0.0, seed: int = 0,
                 platform_config: PlatformConfig | None = None,
                 wifi_profile: LinkProfile | None = None,
                 lora_profile: LinkProfile | None = None):
        self.lock = threading.RLock()
        self.scheduler = Scheduler(start_ts)
        self.trace = TraceLog()
        self.service = PlatformService(platform_config, self.scheduler,
                                       rpc_transport=self._rpc_transport)
        self.broker = MqttBroker(self.scheduler, wifi_profile, self.trace, seed)
        self.join_server = JoinServer(seed, self.trace)
        self.middleware = _WorldMiddleware(self.service, self.trace, self.join_server)
        self.gateway = LoraGateway(self.scheduler, self.middleware, lora_profile,
                                   self.trace, seed, self.join_server)
        self.adapter = WifiAdapter(self.broker, self.service)
        self.hosts: dict = {}

    def add_device(self, device: SimDevice, register: bool = True,
                   activate_at: float | None = None) -> DeviceHost:
        cfg = device.config
        if cfg is None:
            raise DeviceFaultError("device must be provisioned before joining a world")
        if register:
            self.service.register_device(record_from_config(cfg))
        if cfg.link is LinkKind.LORAWAN:
            self.join_server.register(cfg.device_id, cfg.lorawan.app_key)
        host = DeviceHost(self, device)
        self.hosts[cfg.device_id] = host
        if activate_at is not None:
            host.activate(activate_at)
        return host

    def _rpc_transport(self, device_id: str, kind: str, params: dict,
                       request_id: str) -> None:
        host = self.hosts.get(device_id)
        if host is None:
            raise UnknownDeviceError(f"{device_id} is registered but not simulated")
        if host.device.state.phase is Phase.FAULT:
            raise DeviceFaultError(f"{device_id} is in fault state")
        if host.device.config.link is LinkKind.WIFI_MQTT:
            doc = {"kind": kind, "request_id": request_id}
            doc.update(params)
            self.broker.publish(
                "platform", f"v1/devices/{device_id}/rpc/request", json.dumps(doc))
        else:
            self.middleware.note_rpc(device_id, request_id)
            self.gateway.queue_downlink(
                device_id,
                encode_downlink(kind, params.get("tx_per_day"),
                                params.get("reading_period_h")),
                request_id)

    def run_until(self, t_end: float) -> None:
        with self.lock:
            self.scheduler.run_until(t_end)

    def now_iso(self) -> str:
        return iso_utc(self.scheduler.now)


class _WorldMiddleware(Middleware):
    """Middleware with accessors the host wiring needs."""

    def inflight_rpc(self, device_id: str):
        return self._inflight_rpc.get(device_id)

    def resolve_rpc(self, device_id: str):
        return self._inflight_rpc.pop(device_id, None)
