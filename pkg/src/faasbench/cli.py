"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis
from .fingerprint import build_topology, decode_cpu_model, to_hex
from .orchestrator import (
    CampaignConfig,
    HttpSink,
    JsonlSink,
    RecordFormatError,
    SinkError,
    load_records,
    run_campaign,
    summarize,
)
from .sim.clock import MS_PER_DAY, MS_PER_HOUR
from .sim.profile import PRESETS, ProfileError, load_preset, load_profile

DEFAULT_SEED = 1729
EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2

log = logging.getLogger("faasbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def default_seed() -> int:
    raw = os.environ.get("FAASBENCH_SEED")
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"FAASBENCH_SEED must be an integer, got {raw!r}") from None


def _overrides(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        out[key] = value
    return out


def _load_profile(spec: str, overrides: dict[str, str]):
    if spec in PRESETS:
        return load_preset(spec, overrides)
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise UsageError(f"{spec!r} is neither a preset ({', '.join(PRESETS)}) nor a readable profile: {exc}") from None
    return load_profile(text, overrides)


def cmd_simulate(args) -> int:
    if args.days <= 0:
        raise UsageError("--days must be positive")
    if args.interval_hours <= 0:
        raise UsageError("--interval-hours must be positive")
    seed = args.seed if args.seed is not None else default_seed()
    overrides = _overrides(args.set)
    profiles = [_load_profile(p, overrides) for p in (args.profile or ["aws-like"])]
    tiers = None
    if args.tiers:
        tiers = [[t for t in p.memory_tiers if t in args.tiers] for p in profiles]
    try:
        config = CampaignConfig(
            profiles=profiles,
            tiers=tiers,
            interval_ms=round(args.interval_hours * MS_PER_HOUR),
            duration_ms=round(args.days * MS_PER_DAY),
            burst_size=args.burst_size,
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    with JsonlSink(args.output) as sink:
        records = list(run_campaign(config, sink))
    if args.http_sink:
        with HttpSink(args.http_sink, batch_size=args.http_batch) as http:
            for r in records:
                http.write(r)

    summary = summarize(records)
    total = len(records)
    cold = sum(s["cold"] for s in summary.values())
    print(f"records={total}")
    print(f"cold={cold}")
    print(f"warm={total - cold}")
    print(f"cold_fraction={cold / total:.4f}")
    print(f"seed={seed}")
    print(f"output={args.output}")
    for name, s in summary.items():
        print(f"platform={name} records={s['records']} cold={s['cold']} cold_fraction={s['cold_fraction']:.4f}")
    print(f"# {total} invocations, cold fraction {cold / total:.3f}")
    return EXIT_OK


def _read_dataset(path: str):
    try:
        records = load_records(path)
    except RecordFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if not records:
        raise UsageError(f"{path}: dataset is empty")
    return records


def _by_platform(records):
    groups = {}
    for r in records:
        groups.setdefault(r.platform, []).append(r)
    return groups


def cmd_analyze(args) -> int:
    records = _read_dataset(args.dataset)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    cold = analysis.cold_start_stats(records)
    perf = [s for m in analysis.PERFORMANCE_METRICS for s in analysis.performance_stats(records, m)]
    (out / "cold_start_stats.json").write_text(analysis.stats_json(cold))
    (out / "performance_stats.json").write_text(analysis.stats_json(perf))
    analysis.export_csv(cold + perf, out / "tier_stats.csv")

    fits = {}
    window = args.window_hours * MS_PER_HOUR
    for name, recs in _by_platform(records).items():
        for metric in ("total_runtime_ms", "prime_count", "disk_mb_per_s"):
            series = analysis.tick_series(recs, metric)
            if len(series) >= 2:
                analysis.export_csv(analysis.smooth_series(series, window), out / f"{name}_{metric}.csv")
        series = analysis.tick_series(recs, "total_runtime_ms")
        try:
            fits[name] = analysis.fit_diurnal(series).to_dict()
        except ValueError as exc:
            fits[name] = {"error": str(exc)}
    (out / "diurnal_fit.json").write_text(json.dumps(fits, indent=2))

    print(f"records={len(records)}")
    for s in cold:
        print(f"platform={s.platform} tier_mb={s.tier_mb} cold_starts={s.count} cold_start_mean_ms={s.mean:.2f}")
    for name, fit in fits.items():
        if "error" in fit:
            print(f"platform={name} diurnal_fit=unavailable")
        else:
            print(f"platform={name} amplitude={fit['amplitude']:.4f} peak_hour={fit['peak_hour']:.2f} "
                  f"anomaly_windows={len(fit['anomaly_windows'])}")
    print(f"output={out}")
    return EXIT_OK


def cmd_fingerprint(args) -> int:
    records = _read_dataset(args.dataset)
    reports = [build_topology(recs) for recs in _by_platform(records).values()]
    if args.json:
        text = "[" + ",\n".join(r.to_json() for r in reports) + "]\n"
    else:
        text = "\n".join(r.to_table() for r in reports)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_decode_cpu(args) -> int:
    name = decode_cpu_model(args.model_id, args.mhz)
    print(name)
    print(f"model_id_hex={to_hex(args.model_id)}", file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    records = _read_dataset(args.dataset)
    if args.stats:
        if args.metric == analysis.COLD_START:
            stats = analysis.cold_start_stats(records)
        else:
            stats = analysis.performance_stats(records, args.metric)
        analysis.export_csv(stats, args.output)
        print(f"rows={len(stats)}")
    else:
        series = analysis.tick_series(records, args.metric, tier=args.tier)
        if len(series) < 2:
            raise UsageError("series has fewer than two points")
        analysis.export_csv(analysis.smooth_series(series, args.window_hours * MS_PER_HOUR), args.output)
        print(f"rows={len(series)}")
    print(f"output={args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="faasbench", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a virtual-time measurement campaign")
    s.add_argument("--profile", action="append",
                   help=f"preset ({', '.join(PRESETS)}) or profile file; repeatable")
    s.add_argument("--days", type=float, default=30.0)
    s.add_argument("--interval-hours", type=float, default=1.0)
    s.add_argument("--burst-size", type=int, default=50)
    s.add_argument("--tiers", type=int, nargs="+")
    s.add_argument("--seed", type=int, default=None,
                   help=f"default {DEFAULT_SEED}, or $FAASBENCH_SEED")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a profile field, e.g. interference.amplitude=0.2")
    s.add_argument("--http-sink", metavar="URL", help="also POST records as JSON lines")
    s.add_argument("--http-batch", type=int, default=500)
    s.add_argument("-o", "--output", default="dataset.jsonl")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="tier statistics, smoothed series and diurnal fits")
    a.add_argument("dataset")
    a.add_argument("-o", "--output", default="analysis")
    a.add_argument("--window-hours", type=float, default=12.0)
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("fingerprint", help="platform topology from a dataset")
    f.add_argument("dataset")
    f.add_argument("--json", action="store_true")
    f.add_argument("-o", "--output")
    f.set_defaults(func=cmd_fingerprint)

    d = sub.add_parser("decode-cpu", help="name a CPU from /proc/cpuinfo model and MHz")
    d.add_argument("model_id", type=int)
    d.add_argument("mhz", type=float)
    d.set_defaults(func=cmd_decode_cpu)

    e = sub.add_parser("export", help="write one metric's series or tier stats as CSV")
    e.add_argument("dataset")
    e.add_argument("--metric", default="total_runtime_ms")
    e.add_argument("--tier", type=int)
    e.add_argument("--stats", action="store_true", help="export tier statistics instead of a series")
    e.add_argument("--window-hours", type=float, default=12.0)
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ProfileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SinkError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
