"""Result surfaces: per-tier statistics, time series, diurnal fits, CSV."""
from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _accel
from .orchestrator import InvocationRecord
from .sim.clock import MS_PER_DAY, MS_PER_HOUR, as_virtual_time, to_iso

log = logging.getLogger(__name__)

COLD_START = "cold_start_ms"
PERFORMANCE_METRICS = ("prime_count", "disk_mb_per_s", "total_runtime_ms")
SERIES_METRICS = PERFORMANCE_METRICS + ("function_runtime_ms", "numbers_checked")


@dataclass
class TierStats:
    platform: str
    tier_mb: int
    metric: str
    count: int
    mean: float
    median: float
    p95: float
    stddev: float
    min: float
    max: float


def nearest_rank(sorted_values: np.ndarray, pct: float) -> float:
    n = sorted_values.size
    rank = max(1, math.ceil(pct / 100.0 * n))
    return float(sorted_values[rank - 1])


def describe(platform: str, tier: int, metric: str, values: Sequence[float]) -> TierStats:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("no values to describe")
    return TierStats(
        platform=platform,
        tier_mb=tier,
        metric=metric,
        count=int(v.size),
        mean=float(math.fsum(v) / v.size),
        median=nearest_rank(v, 50),
        p95=nearest_rank(v, 95),
        stddev=float(v.std(ddof=1)) if v.size > 1 else 0.0,
        min=float(v[0]),
        max=float(v[-1]),
    )


def _metric_value(rec: InvocationRecord, metric: str) -> Optional[float]:
    if metric in ("total_runtime_ms", "start_lag_ms"):
        return getattr(rec, metric)
    return getattr(rec.report, metric)


def _partition(records: Iterable[InvocationRecord]) -> dict[tuple[str, int], list[InvocationRecord]]:
    groups: dict[tuple[str, int], list[InvocationRecord]] = defaultdict(list)
    for r in records:
        groups[(r.platform, r.tier_mb)].append(r)
    return groups


def cold_start_stats(records: Iterable[InvocationRecord]) -> list[TierStats]:
    """Start-lag statistics over cold invocations, one entry per (platform, tier)."""
    out = []
    for (platform, tier), group in sorted(_partition(records).items()):
        lags = [r.start_lag_ms for r in group if r.is_cold]
        if not lags:
            log.warning("%s tier %d MB has no cold starts; omitted", platform, tier)
            continue
        out.append(describe(platform, tier, COLD_START, lags))
    return out


def performance_stats(records: Iterable[InvocationRecord], metric: str) -> list[TierStats]:
    if metric not in PERFORMANCE_METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {PERFORMANCE_METRICS}")
    out = []
    for (platform, tier), group in sorted(_partition(records).items()):
        values = [v for v in (_metric_value(r, metric) for r in group) if v is not None]
        if values:
            out.append(describe(platform, tier, metric, values))
    return out


def start_counts(records: Iterable[InvocationRecord]) -> dict[tuple[str, int], dict[str, int]]:
    """Total, cold and warm invocation counts per (platform, tier)."""
    out: dict[tuple[str, int], dict[str, int]] = {}
    for key, group in sorted(_partition(records).items()):
        cold = sum(r.is_cold for r in group)
        out[key] = {"total": len(group), "cold": cold, "warm": len(group) - cold}
    return out


@dataclass
class TimeSeries:
    metric: str
    times: np.ndarray
    values: np.ndarray
    smoothed: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("series times must be strictly increasing")
        if self.smoothed is not None:
            self.smoothed = np.asarray(self.smoothed, dtype=np.float64)
            if self.smoothed.shape != self.values.shape:
                raise ValueError("smoothed values differ in length")

    def __len__(self) -> int:
        return int(self.times.size)


def tick_series(
    records: Iterable[InvocationRecord],
    metric: str = "total_runtime_ms",
    bin_ms: int = MS_PER_HOUR,
    tier: Optional[int] = None,
) -> TimeSeries:
    """Mean of ``metric`` per time bin.

    Each point is stamped with the mean midpoint of the function executions
    (after the start lag, before the response) in its bin.
    """
    if metric not in SERIES_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    sums: dict[int, list[float]] = defaultdict(lambda: [0.0, 0.0, 0])
    for r in records:
        if tier is not None and r.tier_mb != tier:
            continue
        v = _metric_value(r, metric)
        if v is None:
            continue
        acc = sums[r.request_time // bin_ms]
        acc[0] += r.request_time + 0.5 * (r.start_lag_ms + r.total_runtime_ms)
        acc[1] += v
        acc[2] += 1
    keys = sorted(sums)
    times = [sums[k][0] / sums[k][2] for k in keys]
    values = [sums[k][1] / sums[k][2] for k in keys]
    return TimeSeries(metric, np.array(times), np.array(values))


def smooth_series(series: TimeSeries, window_ms: float = 12 * MS_PER_HOUR) -> TimeSeries:
    """Gaussian-weighted centered moving average, standard deviation window/2."""
    if len(series) == 0:
        raise ValueError("cannot smooth an empty series")
    if len(series) < 2:
        raise ValueError("smoothing needs at least two points")
    if window_ms <= 0:
        raise ValueError("window must be positive")
    smoothed = _accel.gaussian_smooth(series.times, series.values, window_ms / 2.0)
    # Keep rounding from leaking outside the input envelope.
    smoothed = np.clip(smoothed, series.values.min(), series.values.max())
    return TimeSeries(series.metric, series.times, series.values, smoothed)


@dataclass
class AnomalyWindowFit:
    start: float
    end: float
    mean_deviation: float


@dataclass
class DiurnalFit:
    amplitude: float
    peak_hour: float
    period_hours: float
    mean: float
    residual_rms: float
    anomaly_windows: list[AnomalyWindowFit] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for w in d["anomaly_windows"]:
            w["start_iso"] = to_iso(int(w["start"]))
            w["end_iso"] = to_iso(int(w["end"]))
        return d


def _runs(mask: np.ndarray, min_len: int) -> list[tuple[int, int]]:
    runs = []
    i, n = 0, mask.size
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            if j - i + 1 >= min_len:
                runs.append((i, j))
            i = j + 1
        else:
            i += 1
    return runs


def fit_diurnal(
    series: TimeSeries,
    threshold_sigma: float = 3.0,
    min_run: int = 2,
    max_iter: int = 20,
) -> DiurnalFit:
    """Least-squares fit of ``mean * (1 + A sin(2 pi (hour - phase) / 24))``.

    Anomaly windows are maximal runs of at least ``min_run`` consecutive
    points whose residual exceeds ``threshold_sigma`` residual RMS. Flagged
    windows are left out and the fit repeated until the set is stable, so a
    long dip does not drag the periodic model toward itself. The first pass
    uses a MAD-based scale since the plain RMS is inflated by the dips it is
    meant to find.
    """
    t = series.times
    v = series.values
    if t.size < 3 or (t[-1] - t[0]) + np.median(np.diff(t)) < 3 * MS_PER_DAY:
        raise ValueError("diurnal fit needs a series spanning at least three days")
    w = 2.0 * np.pi * ((t % MS_PER_DAY) / MS_PER_HOUR) / 24.0
    design = np.column_stack([np.ones_like(t), np.sin(w), np.cos(w)])

    inliers = np.ones(t.size, dtype=bool)
    windows: list[tuple[int, int]] = []
    for it in range(max_iter):
        coef, *_ = np.linalg.lstsq(design[inliers], v[inliers], rcond=None)
        resid = v - design @ coef
        rms = float(np.sqrt(np.mean(resid[inliers] ** 2)))
        if it == 0:
            dev = resid - np.median(resid)
            scale = 1.4826 * float(np.median(np.abs(dev)))
        else:
            dev, scale = resid, rms
        thr = max(threshold_sigma * scale, 1e-9 * abs(coef[0]))
        new_windows = _runs(np.abs(dev) > thr, min_run)
        if new_windows == windows:
            break
        windows = new_windows
        inliers = np.ones(t.size, dtype=bool)
        for i, j in windows:
            inliers[i : j + 1] = False
        if inliers.sum() < 3:
            break

    c0, c1, c2 = coef
    r = math.hypot(c1, c2)
    theta = math.atan2(c2, c1)
    peak = ((math.pi / 2 - theta) / (2 * math.pi) * 24.0) % 24.0
    return DiurnalFit(
        amplitude=r / abs(c0) if c0 else 0.0,
        peak_hour=peak,
        period_hours=24.0,
        mean=float(c0),
        residual_rms=rms,
        anomaly_windows=[
            AnomalyWindowFit(float(t[i]), float(t[j]), float(resid[i : j + 1].mean())) for i, j in windows
        ],
    )


# CSV export ---------------------------------------------------------------

def _write_rows(path: Union[str, Path], header: list[str], rows: Iterable[list]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def export_csv(data: Union[TimeSeries, Sequence[TierStats]], path: Union[str, Path]) -> Path:
    """Write stats (one row per platform, tier, metric) or a time series."""
    if isinstance(data, TimeSeries):
        if len(data) == 0:
            raise ValueError("nothing to export")
        header = ["time", "raw"] + (["smoothed"] if data.smoothed is not None else [])
        rows = []
        for i in range(len(data)):
            row = [to_iso(int(round(data.times[i]))), repr(float(data.values[i]))]
            if data.smoothed is not None:
                row.append(repr(float(data.smoothed[i])))
            rows.append(row)
        return _write_rows(path, header, rows)
    stats = list(data)
    if not stats:
        raise ValueError("nothing to export")
    header = list(asdict(stats[0]))
    return _write_rows(path, header, ([repr(x) if isinstance(x, float) else x for x in asdict(s).values()]
                                      for s in stats))


def read_series_csv(path: Union[str, Path], metric: str = "") -> TimeSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    times = [as_virtual_time(r["time"]) for r in rows]
    raw = [float(r["raw"]) for r in rows]
    smoothed = [float(r["smoothed"]) for r in rows] if rows and "smoothed" in rows[0] else None
    return TimeSeries(metric, np.array(times, dtype=float), np.array(raw), smoothed)


def read_stats_csv(path: Union[str, Path]) -> list[TierStats]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            TierStats(r["platform"], int(r["tier_mb"]), r["metric"], int(r["count"]),
                      *(float(r[k]) for k in ("mean", "median", "p95", "stddev", "min", "max")))
            for r in csv.DictReader(fh)
        ]


def stats_json(stats: Sequence[TierStats]) -> str:
    return json.dumps([asdict(s) for s in stats], indent=2)
