"""Virtual time and the event queue.

Virtual time is an integer count of milliseconds since the Unix epoch. It is
kept as a plain ``int`` on hot paths; helpers here convert and validate.
"""
from __future__ import annotations

import heapq
import itertools
from datetime import datetime, timezone
from typing import Any, Iterator, Union

VirtualTime = int

MS_PER_HOUR = 3_600_000
MS_PER_DAY = 24 * MS_PER_HOUR

DEFAULT_START: VirtualTime = int(datetime(2019, 10, 1, tzinfo=timezone.utc).timestamp() * 1000)


def as_virtual_time(value: Union[int, float, str, datetime]) -> VirtualTime:
    """Coerce an int, ISO-8601 string or datetime to virtual milliseconds."""
    if isinstance(value, bool):
        raise TypeError("bool is not a time")
    if isinstance(value, str):
        value = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if isinstance(value, datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        value = round(value.timestamp() * 1000)
    t = int(value)
    if t != value or t < 0:
        raise ValueError(f"virtual time must be a non-negative integer ms, got {value!r}")
    return t


def to_iso(t: VirtualTime) -> str:
    dt = datetime.fromtimestamp(t / 1000.0, tz=timezone.utc)
    return dt.isoformat(timespec="milliseconds").replace("+00:00", "Z")


def hour_of_day(t: float) -> float:
    """Fractional UTC hour in [0, 24)."""
    return (t % MS_PER_DAY) / MS_PER_HOUR


class EventQueue:
    """Events ordered by (time, insertion id); ties never compare payloads."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Any]] = []
        self._ids = itertools.count()
        self.now: VirtualTime = 0

    def push(self, t: VirtualTime, payload: Any) -> None:
        if t < self.now:
            raise ValueError(f"cannot schedule at {t}, clock is already at {self.now}")
        heapq.heappush(self._heap, (t, next(self._ids), payload))

    def __len__(self) -> int:
        return len(self._heap)

    def drain(self) -> Iterator[tuple[VirtualTime, Any]]:
        while self._heap:
            t, _, payload = heapq.heappop(self._heap)
            self.now = t
            yield t, payload
