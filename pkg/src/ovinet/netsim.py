"""Transport simulation: pub/sub broker with RPC topics (WiFi path) and a
Class-A LoRaWAN link (OTAA join, payload bounds, RX-window downlinks) bridged
into the platform by a middleware adapter.

Every network event is appended to a TraceLog with its simulated timestamp;
acceptance checks assert window discipline and ordering from these traces.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadCredentialsError,
    NotConnectedError,
    NotJoinedError,
    PayloadSizeError,
    ReplayedNonceError,
)
from .lpp import MAX_FRAME_BYTES, MIN_FRAME_BYTES, decode_lpp
from .simclock import Scheduler
from .telemetry import LinkKind, decode_json

PORT_TELEMETRY = 1
PORT_DOWNLINK = 2
PORT_RPC_RESPONSE = 3

OPCODE_READ_ON_DEMAND = 0x01
OPCODE_RESCHEDULE = 0x02


@dataclass(frozen=True)
class LinkProfile:
    kind: LinkKind
    latency_s: tuple = (0.02, 0.2)       # uniform bounds
    loss_rate: float = 0.0
    max_payload_bytes: int | None = None
    min_payload_bytes: int = 0
    retries: int = 5
    backoff_base_s: float = 1.0
    airtime_s: float = 3.0               # fixed per LoRa uplink
    duty_cycle_limit: float = 0.01
    rx1_delay_s: float = 1.0
    rx_window_s: float = 3.0

    @staticmethod
    def wifi(latency_s=(0.02, 0.2), loss_rate=0.0) -> "LinkProfile":
        return LinkProfile(kind=LinkKind.WIFI_MQTT, latency_s=latency_s,
                           loss_rate=loss_rate)

    @staticmethod
    def lorawan(latency_s=(0.05, 0.4), loss_rate=0.0) -> "LinkProfile":
        return LinkProfile(kind=LinkKind.LORAWAN, latency_s=latency_s,
                           loss_rate=loss_rate,
                           max_payload_bytes=MAX_FRAME_BYTES,
                           min_payload_bytes=MIN_FRAME_BYTES)


class TraceLog:
    """Append-only record of network events, one dict per event."""

    def __init__(self):
        self.records: list = []

    def record(self, t: float, actor: str, kind: str, **detail) -> None:
        rec = {"t": t, "actor": actor, "kind": kind}
        rec.update(detail)
        self.records.append(rec)

    def of_kind(self, kind: str) -> list:
        return [r for r in self.records if r["kind"] == kind]

    def lines(self) -> list:
        out = []
        for r in self.records:
            extra = " ".join(f"{k}={v}" for k, v in r.items()
                             if k not in ("t", "actor", "kind"))
            out.append(f"{r['t']:.3f} {r['actor']} {r['kind']} {extra}".rstrip())
        return out


class _FifoLink:
    """Per-sender serialized delivery with loss, bounded retries, backoff.

    Serializing each sender's queue guarantees enqueue-order delivery even
    when earlier messages need retries.
    """

    def __init__(self, scheduler: Scheduler, profile: LinkProfile,
                 rng: np.random.Generator, trace: TraceLog, actor: str):
        self.scheduler = scheduler
        self.profile = profile
        self.rng = rng
        self.trace = trace
        self.actor = actor
        self._queues: dict = {}
        self._busy: set = set()
        self.outcomes: dict = {}
        self._next_id = 0

    def send(self, sender: str, size: int, deliver, failed=None) -> int:
        self._next_id += 1
        msg_id = self._next_id
        self.outcomes[msg_id] = "pending"
        self._queues.setdefault(sender, deque()).append((msg_id, size, deliver, failed))
        if sender not in self._busy:
            self._start_next(sender)
        return msg_id

    def _start_next(self, sender: str) -> None:
        queue = self._queues.get(sender)
        if not queue:
            self._busy.discard(sender)
            return
        self._busy.add(sender)
        msg = queue.popleft()
        self._attempt(sender, msg, attempt=1, delivered=False)

    def _attempt(self, sender, msg, attempt, delivered) -> None:
        msg_id, size, deliver, failed = msg
        lo, hi = self.profile.latency_s
        latency = float(self.rng.uniform(lo, hi))
        lost = float(self.rng.random()) < self.profile.loss_rate

        def complete():
            if not lost:
                self.outcomes[msg_id] = "delivered"
                deliver(self.scheduler.now)
                ack_lost = float(self.rng.random()) < self.profile.loss_rate
                if ack_lost and attempt < self.profile.retries:
                    self.trace.record(self.scheduler.now, self.actor,
                                      "ack_lost", msg_id=msg_id, attempt=attempt)
                    self._retry(sender, msg, attempt, True)
                    return
            else:
                self.trace.record(self.scheduler.now, self.actor, "msg_lost",
                                  msg_id=msg_id, attempt=attempt)
                if attempt < self.profile.retries:
                    self._retry(sender, msg, attempt, delivered)
                    return
                if not delivered:
                    self.outcomes[msg_id] = "failed"
                    self.trace.record(self.scheduler.now, self.actor,
                                      "delivery_failed", msg_id=msg_id)
                    if failed is not None:
                        failed(self.scheduler.now)
            self._start_next(sender)

        self.scheduler.after(latency, complete)

    def _retry(self, sender, msg, attempt, delivered) -> None:
        backoff = self.profile.backoff_base_s * (2 ** (attempt - 1))
        self.scheduler.after(
            backoff, self._attempt, sender, msg, attempt + 1, delivered)


def topic_matches(pattern: str, topic: str) -> bool:
    pp = pattern.split("/")
    tt = topic.split("/")
    for i, seg in enumerate(pp):
        if seg == "#":
            return True
        if i >= len(tt):
            return False
        if seg != "+" and seg != tt[i]:
            return False
    return len(pp) == len(tt)


class MqttBroker:
    """Topic pub/sub with at-least-once delivery over a lossy WiFi profile."""

    def __init__(self, scheduler: Scheduler, profile: LinkProfile | None = None,
                 trace: TraceLog | None = None, seed: int = 0):
        self.scheduler = scheduler
        self.profile = profile or LinkProfile.wifi()
        self.trace = trace or TraceLog()
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0x3B]))
        self._link = _FifoLink(scheduler, self.profile, self.rng, self.trace, "broker")
        self._clients: set = set()
        self._subs: list = []   # (client_id, pattern, callback)

    def connect(self, client_id: str) -> None:
        self._clients.add(client_id)
        self.trace.record(self.scheduler.now, "broker", "connect", client=client_id)

    def subscribe(self, client_id: str, pattern: str, callback) -> None:
        if client_id not in self._clients:
            raise NotConnectedError(f"{client_id} is not connected")
        self._subs.append((client_id, pattern, callback))

    def publish(self, client_id: str, topic: str, payload: str) -> int:
        if client_id not in self._clients:
            raise NotConnectedError(f"{client_id} is not connected")
        enqueued_at = self.scheduler.now
        self.trace.record(enqueued_at, "broker", "publish",
                          client=client_id, topic=topic, size=len(payload))

        def deliver(t: float):
            self.trace.record(t, "broker", "receipt", topic=topic,
                              enqueued_at=enqueued_at, lag=t - enqueued_at)
            for _cid, pattern, callback in list(self._subs):
                if topic_matches(pattern, topic):
                    callback(topic, payload, t)

        return self._link.send(client_id, len(payload), deliver)

    def outcome(self, msg_id: int) -> str:
        return self._link.outcomes.get(msg_id, "unknown")


@dataclass
class JoinSession:
    device_id: str
    join_nonce: int
    session_keys: tuple = ()
    state: str = "idle"      # idle | joining | joined


class JoinServer:
    """OTAA join handling: credentials check, nonce replay rejection."""

    def __init__(self, seed: int = 0, trace: TraceLog | None = None):
        self.seed = seed
        self.trace = trace or TraceLog()
        self._credentials: dict = {}
        self._used_nonces: dict = {}
        self.sessions: dict = {}

    def register(self, device_id: str, app_key: str) -> None:
        self._credentials[device_id] = app_key

    def request_join(self, device_id: str, app_key: str, nonce: int,
                     t: float = 0.0) -> JoinSession:
        session = JoinSession(device_id=device_id, join_nonce=nonce, state="joining")
        if self._credentials.get(device_id) != app_key:
            self.trace.record(t, "join", "join_rejected", device=device_id,
                              reason="bad_credentials")
            session.state = "idle"
            raise BadCredentialsError(f"join rejected for {device_id}")
        if nonce in self._used_nonces.setdefault(device_id, set()):
            self.trace.record(t, "join", "join_rejected", device=device_id,
                              reason="replayed_nonce", nonce=nonce)
            raise ReplayedNonceError(f"nonce {nonce} already used by {device_id}")
        self._used_nonces[device_id].add(nonce)
        digest = hashlib.sha256(
            f"{device_id}:{app_key}:{nonce}:{self.seed}".encode()).hexdigest()
        session.session_keys = (digest[:32], digest[32:])
        session.state = "joined"
        self.sessions[device_id] = session
        self.trace.record(t, "join", "joined", device=device_id, nonce=nonce)
        return session

    def is_joined(self, device_id: str) -> bool:
        s = self.sessions.get(device_id)
        return s is not None and s.state == "joined"


def encode_downlink(kind: str, tx_per_day: int | None = None,
                    period_h: float | None = None) -> bytes:
    if kind == "read_on_demand":
        return bytes((OPCODE_READ_ON_DEMAND,))
    if kind == "reschedule":
        return bytes((OPCODE_RESCHEDULE, int(tx_per_day), int(round(period_h))))
    raise ValueError(f"unknown downlink kind {kind!r}")


def decode_downlink(data: bytes) -> dict:
    if not data:
        raise PayloadSizeError("empty downlink")
    if data[0] == OPCODE_READ_ON_DEMAND:
        return {"kind": "read_on_demand"}
    if data[0] == OPCODE_RESCHEDULE:
        if len(data) < 3:
            raise PayloadSizeError("reschedule needs 2 operand bytes")
        return {"kind": "reschedule", "tx_per_day": data[1],
                "reading_period_h": float(data[2])}
    raise ValueError(f"unknown downlink opcode 0x{data[0]:02x}")


def encode_rpc_response_frame(opcode: int, egg_count: int, assay_id: int) -> bytes:
    frame = bytes((opcode, 0x00)) + int(egg_count).to_bytes(2, "big") \
        + int(assay_id).to_bytes(2, "big")
    return frame.ljust(MIN_FRAME_BYTES, b"\x00")   # AU915 floor padding


def decode_rpc_response_frame(data: bytes) -> dict:
    return {
        "opcode": data[0],
        "status": data[1],
        "egg_count": int.from_bytes(data[2:4], "big"),
        "assay_id": int.from_bytes(data[4:6], "big"),
    }


class LoraGateway:
    """Class-A semantics: uplinks anytime (when joined), downlinks only in the
    RX window that follows an uplink; at most one downlink queued per device."""

    def __init__(self, scheduler: Scheduler, middleware,
                 profile: LinkProfile | None = None,
                 trace: TraceLog | None = None, seed: int = 0,
                 join_server: JoinServer | None = None):
        self.scheduler = scheduler
        self.middleware = middleware
        self.profile = profile or LinkProfile.lorawan()
        self.trace = trace or TraceLog()
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0x10A]))
        self.join_server = join_server or JoinServer(seed=seed, trace=self.trace)
        self._link = _FifoLink(scheduler, self.profile, self.rng, self.trace, "gateway")
        self._pending_downlink: dict = {}
        self._downlink_handlers: dict = {}
        self._airtime_end: dict = {}

    def register_downlink_handler(self, device_id: str, callback) -> None:
        self._downlink_handlers[device_id] = callback

    def uplink(self, device_id: str, port: int, payload: bytes) -> int:
        now = self.scheduler.now
        if not self.join_server.is_joined(device_id):
            self.trace.record(now, "gateway", "uplink_rejected",
                              device=device_id, reason="not_joined")
            raise NotJoinedError(f"{device_id} has no joined session")
        size = len(payload)
        if self.profile.max_payload_bytes is not None and size > self.profile.max_payload_bytes:
            raise PayloadSizeError(
                f"payload of {size} bytes exceeds {self.profile.max_payload_bytes}")
        if size < self.profile.min_payload_bytes:
            raise PayloadSizeError(
                f"payload of {size} bytes below the {self.profile.min_payload_bytes}-byte floor")

        gap = self.profile.airtime_s / self.profile.duty_cycle_limit
        last_end = self._airtime_end.get(device_id)
        if last_end is not None and now < last_end + gap - self.profile.airtime_s:
            self.trace.record(now, "gateway", "duty_cycle_warning",
                              device=device_id)
        self._airtime_end[device_id] = now + self.profile.airtime_s
        self.trace.record(now, "gateway", "uplink", device=device_id,
                          port=port, size=size)

        def deliver(t: float):
            self.trace.record(t, "gateway", "uplink_receipt", device=device_id,
                              port=port, enqueued_at=now, lag=t - now)
            self.middleware.on_uplink(device_id, port, payload, t)
            self._open_rx_window(device_id, t)

        return self._link.send(device_id, size, deliver)

    def _open_rx_window(self, device_id: str, uplink_receipt: float) -> None:
        open_t = uplink_receipt + self.profile.rx1_delay_s
        close_t = open_t + self.profile.rx_window_s
        pending = self._pending_downlink.pop(device_id, None)
        if pending is None:
            return
        data, request_id = pending

        def deliver():
            self.trace.record(self.scheduler.now, "gateway", "downlink_delivered",
                              device=device_id, request_id=request_id,
                              window_open=open_t, window_close=close_t,
                              after_uplink_at=uplink_receipt)
            handler = self._downlink_handlers.get(device_id)
            if handler is not None:
                handler(data, self.scheduler.now)

        self.scheduler.at(open_t, deliver)

    def queue_downlink(self, device_id: str, data: bytes,
                       request_id: str | None = None) -> None:
        now = self.scheduler.now
        superseded = self._pending_downlink.get(device_id)
        if superseded is not None:
            self.trace.record(now, "gateway", "downlink_superseded",
                              device=device_id, dropped_request=superseded[1])
        self._pending_downlink[device_id] = (data, request_id)
        self.trace.record(now, "gateway", "downlink_queued",
                          device=device_id, request_id=request_id)


def frame_hash(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


class Middleware:
    """Decodes LoRa uplinks into platform ingestion calls; quarantines junk."""

    def __init__(self, service, trace: TraceLog | None = None,
                 join_server: JoinServer | None = None):
        self.service = service
        self.trace = trace or TraceLog()
        self.join_server = join_server
        self.quarantined: dict = {}
        self._inflight_rpc: dict = {}     # device_id -> request_id

    def note_rpc(self, device_id: str, request_id: str) -> None:
        self._inflight_rpc[device_id] = request_id

    def on_uplink(self, device_id: str, port: int, payload: bytes, t: float) -> None:
        if self.join_server is not None and not self.join_server.is_joined(device_id):
            self.trace.record(t, "middleware", "security_reject",
                              device=device_id, frame=frame_hash(payload))
            return
        if port == PORT_TELEMETRY:
            try:
                decoded = decode_lpp(payload)
            except Exception as exc:
                self.quarantined[frame_hash(payload)] = {
                    "device_id": device_id, "payload": payload.hex(),
                    "error": str(exc), "t": t,
                }
                self.trace.record(t, "middleware", "quarantined",
                                  device=device_id, frame=frame_hash(payload),
                                  error=type(exc).__name__)
                return
            ev = decoded.as_event(device_id, ts=t)
            self.service.ingest(ev, receipt_ts=t)
        elif port == PORT_RPC_RESPONSE:
            request_id = self._inflight_rpc.pop(device_id, None)
            resp = decode_rpc_response_frame(payload)
            if request_id is not None:
                self.service.mark_rpc_answered(request_id, resp, t)
            else:
                self.trace.record(t, "middleware", "orphan_rpc_response",
                                  device=device_id)
        else:
            self.trace.record(t, "middleware", "unknown_port",
                              device=device_id, port=port)


class WifiAdapter:
    """Bridges broker telemetry/RPC topics into the platform service."""

    def __init__(self, broker: MqttBroker, service):
        self.broker = broker
        self.service = service
        broker.connect("platform")
        broker.subscribe("platform", "v1/devices/+/telemetry", self._on_telemetry)
        broker.subscribe("platform", "v1/devices/+/rpc/response", self._on_rpc_response)

    def _on_telemetry(self, topic: str, payload: str, t: float) -> None:
        try:
            ev = decode_json(payload)
        except Exception as exc:
            self.service.quarantine_raw(topic, payload, str(exc), t)
            return
        self.service.ingest(ev, receipt_ts=t)

    def _on_rpc_response(self, topic: str, payload: str, t: float) -> None:
        doc = json.loads(payload)
        request_id = doc.get("request_id")
        if request_id:
            self.service.mark_rpc_answered(request_id, doc, t)
