"""The observer: invocation scenarios, hourly campaigns and record sinks."""
from __future__ import annotations

import json
import logging
import urllib.request
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .probe.report import ProbeReport
from .sim.clock import DEFAULT_START, MS_PER_DAY, MS_PER_HOUR, EventQueue, VirtualTime
from .sim.platform import Execution, Platform
from .sim.profile import PlatformProfile

log = logging.getLogger(__name__)

SEQUENTIAL = "sequential"
BURST = "burst"


@dataclass
class InvocationRecord:
    platform: str
    region: str
    tier_mb: int
    request_time: VirtualTime
    response_time: VirtualTime
    total_runtime_ms: int
    start_lag_ms: float
    is_cold: bool
    scenario: str
    report: ProbeReport

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["report"] = self.report.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "InvocationRecord":
        d = dict(data)
        d["report"] = ProbeReport.from_dict(d["report"])
        return cls(**d)


def _record(platform: Platform, tier: int, ex: Execution, scenario: str) -> InvocationRecord:
    p = platform.profile
    return InvocationRecord(
        platform=p.name,
        region=p.region,
        tier_mb=tier,
        request_time=ex.request_time,
        response_time=ex.response_time,
        total_runtime_ms=ex.response_time - ex.request_time,
        start_lag_ms=ex.start_lag_ms,
        is_cold=ex.report.is_cold,
        scenario=scenario,
        report=ex.report,
    )


def run_sequential_pair(platform: Platform, tier: int, t: VirtualTime) -> list[InvocationRecord]:
    """Invoke twice; the second request goes out when the first response lands."""
    first = platform.invoke(tier, t)
    second = platform.invoke(tier, first.response_time)
    return [_record(platform, tier, first, SEQUENTIAL), _record(platform, tier, second, SEQUENTIAL)]


def run_concurrent_burst(platform: Platform, tier: int, n: int, t: VirtualTime) -> list[InvocationRecord]:
    """``n`` requests stamped with the same virtual time."""
    if n < 1:
        raise ValueError("burst size must be >= 1")
    return [_record(platform, tier, platform.invoke(tier, t), BURST) for _ in range(n)]


def platform_rng(seed: int, profile_name: str) -> np.random.Generator:
    """Independent stream per platform so campaigns compose deterministically."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(profile_name.encode())]))


@dataclass
class CampaignConfig:
    profiles: list[PlatformProfile]
    tiers: Optional[list[list[int]]] = None
    interval_ms: int = MS_PER_HOUR
    duration_ms: int = 30 * MS_PER_DAY
    burst_size: int = 50
    seed: int = 0
    start: VirtualTime = DEFAULT_START

    def __post_init__(self):
        if self.interval_ms <= 0:
            raise ValueError("interval must be positive")
        if self.duration_ms <= 0:
            raise ValueError("duration must be positive")
        if self.burst_size < 1:
            raise ValueError("burst_size must be >= 1")
        if not self.profiles:
            raise ValueError("no profiles configured")
        if self.tiers is None:
            self.tiers = [list(p.memory_tiers) for p in self.profiles]
        if len(self.tiers) != len(self.profiles):
            raise ValueError("tiers must have one list per profile")
        for p, tiers in zip(self.profiles, self.tiers):
            bad = [t for t in tiers if t not in p.memory_tiers]
            if bad:
                raise ValueError(f"{p.name} does not offer tiers {bad}")

    @property
    def ticks(self) -> int:
        return -(-self.duration_ms // self.interval_ms)


class SinkError(IOError):
    def __init__(self, message: str, written: int):
        super().__init__(message)
        self.written = written


class Campaign:
    """Hourly sequential-pair then burst, for every (profile, tier).

    Scenarios from different ticks may overlap in virtual time (slow disks
    make single invocations long); every request is processed in
    (time, event id) order against the platform state at that instant.
    """

    def __init__(self, config: CampaignConfig):
        self.config = config
        self.platforms = [Platform(p, platform_rng(config.seed, p.name)) for p in config.profiles]

    def run(self) -> Iterator[InvocationRecord]:
        cfg = self.config
        q = EventQueue()
        q.push(cfg.start, ("tick", 0))
        for t, (kind, *args) in q.drain():
            if kind == "tick":
                k = args[0]
                for i, tiers in enumerate(cfg.tiers):
                    for tier in tiers:
                        q.push(t, ("pair1", i, tier))
                if k + 1 < cfg.ticks:
                    q.push(cfg.start + (k + 1) * cfg.interval_ms, ("tick", k + 1))
                continue
            i, tier = args
            platform = self.platforms[i]
            if kind == "burst":
                yield from run_concurrent_burst(platform, tier, cfg.burst_size, t)
                continue
            ex = platform.invoke(tier, t)
            yield _record(platform, tier, ex, SEQUENTIAL)
            q.push(ex.response_time, ("pair2" if kind == "pair1" else "burst", i, tier))


def run_campaign(config: CampaignConfig, sink: Optional["Sink"] = None) -> Iterator[InvocationRecord]:
    """Stream a campaign's records; with a sink, each record is also persisted.

    A sink failure stops the campaign after flushing what was written.
    """
    records = Campaign(config).run()
    if sink is None:
        yield from records
        return
    for rec in records:
        sink.write(rec)
        yield rec
    sink.flush()


class Sink:
    written = 0

    def write(self, record: InvocationRecord) -> None:
        raise NotImplementedError

    def flush(self) -> None:
        pass

    def close(self) -> None:
        self.flush()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class JsonlSink(Sink):
    """Newline-delimited JSON, one record per line."""

    def __init__(self, target: Union[str, Path, IO[str]]):
        if isinstance(target, (str, Path)):
            self._fh: IO[str] = open(target, "w", encoding="utf-8", newline="\n")
            self._owned = True
        else:
            self._fh, self._owned = target, False
        self.written = 0

    def write(self, record: InvocationRecord) -> None:
        try:
            self._fh.write(record.to_json() + "\n")
        except OSError as exc:
            self._flush_quietly()
            raise SinkError(f"write failed: {exc}", self.written) from exc
        self.written += 1

    def _flush_quietly(self) -> None:
        try:
            self._fh.flush()
        except OSError:
            pass

    def flush(self) -> None:
        try:
            self._fh.flush()
        except OSError as exc:
            raise SinkError(f"flush failed: {exc}", self.written) from exc

    def close(self) -> None:
        self.flush()
        if self._owned:
            self._fh.close()


class HttpSink(Sink):
    """POSTs newline-delimited JSON batches to ``url``."""

    def __init__(self, url: str, batch_size: int = 500, timeout: float = 10.0):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.url = url
        self.batch_size = batch_size
        self.timeout = timeout
        self._batch: list[str] = []
        self.written = 0
        self.batches_posted = 0

    def write(self, record: InvocationRecord) -> None:
        self._batch.append(record.to_json())
        if len(self._batch) >= self.batch_size:
            self.flush()

    def flush(self) -> None:
        if not self._batch:
            return
        body = ("\n".join(self._batch) + "\n").encode()
        req = urllib.request.Request(
            self.url, data=body, method="POST", headers={"Content-Type": "application/x-ndjson"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                if resp.status >= 300:
                    raise SinkError(f"HTTP {resp.status} from {self.url}", self.written)
        except OSError as exc:
            raise SinkError(f"POST to {self.url} failed: {exc}", self.written) from exc
        self.written += len(self._batch)
        self.batches_posted += 1
        self._batch.clear()


def persist(records: Iterable[InvocationRecord], sink: Sink) -> int:
    """Write every record to ``sink`` and flush; returns the count written."""
    n = 0
    for rec in records:
        sink.write(rec)
        n += 1
    sink.flush()
    return n


class RecordFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def iter_records(path: Union[str, Path]) -> Iterator[InvocationRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield InvocationRecord.from_dict(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise RecordFormatError(lineno, str(exc)) from None


def load_records(path: Union[str, Path]) -> list[InvocationRecord]:
    return list(iter_records(path))


def summarize(records: Sequence[InvocationRecord]) -> dict[str, dict[str, float]]:
    """Invocation and cold counts per platform."""
    out: dict[str, dict[str, float]] = {}
    for r in records:
        s = out.setdefault(r.platform, {"records": 0, "cold": 0})
        s["records"] += 1
        s["cold"] += r.is_cold
    for s in out.values():
        s["warm"] = s["records"] - s["cold"]
        s["cold_fraction"] = s["cold"] / s["records"]
    return out
