"""Virtual clock and discrete-event scheduler.

All simulated components share one Scheduler; nothing in the package reads
wall-clock time. Simulated instants are float Unix seconds (UTC).
"""

from __future__ import annotations

import heapq
import itertools
from datetime import datetime, timezone


def parse_instant(value) -> float:
    """Accept float seconds, datetime, or ISO-8601 text; return Unix seconds."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        return value.timestamp()
    text = str(value).strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def iso_utc(ts: float) -> str:
    """Render Unix seconds as ISO-8601 UTC with microsecond precision."""
    dt = datetime.fromtimestamp(round(ts, 6), tz=timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


def ts_round(ts: float) -> float:
    """Quantize an instant to 1 us so JSON round-trips are exact."""
    return round(ts, 6)


class SimClock:
    """Monotone virtual clock."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    @property
    def now(self) -> float:
        return self._now

    def advance_to(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"clock cannot move backwards ({t} < {self._now})")
        self._now = t


class Scheduler:
    """Binary-heap event queue over a SimClock.

    Events scheduled for the same instant fire in scheduling order.
    """

    def __init__(self, start: float = 0.0):
        self.clock = SimClock(start)
        self._heap: list = []
        self._seq = itertools.count()
        self._cancelled: set[int] = set()

    @property
    def now(self) -> float:
        return self.clock.now

    def at(self, t: float, fn, *args) -> int:
        if t < self.now:
            raise ValueError(f"cannot schedule in the past ({t} < {self.now})")
        handle = next(self._seq)
        heapq.heappush(self._heap, (float(t), handle, fn, args))
        return handle

    def after(self, delay: float, fn, *args) -> int:
        return self.at(self.now + delay, fn, *args)

    def cancel(self, handle: int) -> None:
        self._cancelled.add(handle)

    def step(self) -> bool:
        """Run the next pending event; False when the queue is empty."""
        while self._heap:
            t, handle, fn, args = heapq.heappop(self._heap)
            if handle in self._cancelled:
                self._cancelled.discard(handle)
                continue
            self.clock.advance_to(t)
            fn(*args)
            return True
        return False

    def run_until(self, t_end: float) -> None:
        """Run every event with timestamp <= t_end; leave the clock at t_end."""
        while self._heap:
            t, handle, fn, args = self._heap[0]
            if t > t_end:
                break
            heapq.heappop(self._heap)
            if handle in self._cancelled:
                self._cancelled.discard(handle)
                continue
            self.clock.advance_to(t)
            fn(*args)
        self.clock.advance_to(max(self.now, t_end))

    def run_all(self, limit: int = 10_000_000) -> None:
        steps = 0
        while self.step():
            steps += 1
            if steps >= limit:
                raise RuntimeError("event limit exceeded; runaway simulation?")

    def pending(self) -> int:
        return sum(1 for (_, h, _, _) in self._heap if h not in self._cancelled)
