"""Compare the numba kernels with their numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run once untimed so JIT compilation is excluded, then timed
``repeat`` times under each path. Outputs are checked for agreement first.
"""
from __future__ import annotations

import argparse
import os
import time

import numpy as np

from faasbench import _accel


def best_of(fn, repeat):
    fn()  # warm-up (compilation, page faults)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run_both(fn, repeat):
    out = {}
    for label, flag in (("numba", ""), ("numpy", "1")):
        os.environ["FAASBENCH_NO_NUMBA"] = flag
        if label == "numba" and not _accel.use_numba():
            out[label] = (None, None)
            continue
        out[label] = (fn(), best_of(fn, repeat))
    os.environ.pop("FAASBENCH_NO_NUMBA", None)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-max", type=int, default=2_000_000)
    ap.add_argument("--points", type=int, default=30 * 24 * 5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    t = np.cumsum(rng.uniform(0.5, 1.5, args.points)) * 3_600_000
    v = rng.normal(1000, 50, args.points)

    cases = {
        f"trial_division_costs({args.n_max})": lambda: _accel.trial_division_costs(args.n_max),
        f"gaussian_smooth({args.points} points)": lambda: _accel.gaussian_smooth(t, v, 6 * 3_600_000),
    }
    print(f"{'kernel':<38}{'numba s':>10}{'numpy s':>10}{'speed-up':>10}")
    for name, fn in cases.items():
        res = run_both(fn, args.repeat)
        (nb_out, nb_t), (np_out, np_t) = res["numba"], res["numpy"]
        if nb_out is not None:
            a = nb_out if isinstance(nb_out, tuple) else (nb_out,)
            b = np_out if isinstance(np_out, tuple) else (np_out,)
            assert all(np.allclose(x, y, rtol=1e-12) for x, y in zip(a, b)), f"{name}: paths disagree"
            print(f"{name:<38}{nb_t:>10.4f}{np_t:>10.4f}{np_t / nb_t:>9.1f}x")
        else:
            print(f"{name:<38}{'n/a':>10}{np_t:>10.4f}{'':>10}")


if __name__ == "__main__":
    main()
