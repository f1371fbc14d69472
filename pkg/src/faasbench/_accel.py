"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``FAASBENCH_NO_NUMBA=1`` to force the numpy implementations (useful when
numba is missing or when checking that both paths agree).
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAS_NUMBA = False


def use_numba() -> bool:
    """True when the numba kernels are active."""
    flag = os.environ.get("FAASBENCH_NO_NUMBA", "").strip().lower()
    return HAS_NUMBA and flag not in ("1", "true", "yes")


def _trial_division_costs_loop(n_max):
    # Same smallest-prime-factor sieve as the numpy path, as plain loops.
    spf = np.zeros(n_max + 1, dtype=np.int64)
    p = 2
    while p * p <= n_max:
        if spf[p] == 0:
            for m in range(p * p, n_max + 1, p):
                if spf[m] == 0:
                    spf[m] = p
        p += 1
    costs = np.zeros(n_max + 1, dtype=np.int64)
    primes = np.zeros(n_max + 1, dtype=np.bool_)
    r = 1
    for n in range(2, n_max + 1):
        while (r + 1) * (r + 1) <= n:
            r += 1
        if spf[n] == 0:
            primes[n] = True
            costs[n] = r
        else:
            costs[n] = spf[n] - 1
    return costs, primes


if HAS_NUMBA:
    _trial_division_costs_nb = njit(cache=True, nogil=True)(_trial_division_costs_loop)


def isqrt_array(n: np.ndarray) -> np.ndarray:
    """Exact floor square root of a non-negative int64 array."""
    r = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    r -= (r * r > n).astype(np.int64)
    r += ((r + 1) * (r + 1) <= n).astype(np.int64)
    return r


def _trial_division_costs_np(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    # Smallest-prime-factor sieve: a composite n stops the loop at its
    # smallest factor p after p - 1 condition checks; a prime runs the loop
    # to isqrt(n) and exits on the failing check, isqrt(n) checks in total.
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, int(np.sqrt(n_max)) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    n = np.arange(n_max + 1, dtype=np.int64)
    primes = spf == 0
    primes[:2] = False
    costs = np.where(primes, isqrt_array(n), spf - 1)
    costs[:2] = 0
    return costs, primes


def trial_division_costs(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-candidate loop cost and primality for every n in ``[0, n_max]``.

    The cost of a candidate is the number of times the trial-division loop
    condition is evaluated while testing it. Entries 0 and 1 are zero/False.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if use_numba():
        return _trial_division_costs_nb(n_max)
    return _trial_division_costs_np(n_max)


def gaussian_smooth(times: np.ndarray, values: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-weighted centered average over irregular sample times.

    Weights are renormalized per output point, so edges average only over the
    samples that exist.
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if use_numba():
        return _gaussian_smooth_nb(t, v, float(sigma))
    return _gaussian_smooth_np(t, v, float(sigma))


def _gaussian_smooth_np(t, v, sigma):
    out = np.empty_like(v)
    # Chunked so a month of hourly points (or more) stays memory-light.
    step = 2048
    for lo in range(0, t.size, step):
        d = (t[lo : lo + step, None] - t[None, :]) / sigma
        w = np.exp(-0.5 * d * d)
        out[lo : lo + step] = (w @ v) / w.sum(axis=1)
    return out


def _gaussian_smooth_loop(t, v, sigma):
    n = t.size
    out = np.empty(n)
    cutoff = 8.0 * sigma
    for i in range(n):
        num = 0.0
        den = 0.0
        for j in range(n):
            d = t[i] - t[j]
            if d > cutoff or d < -cutoff:
                continue
            w = np.exp(-0.5 * (d / sigma) ** 2)
            num += w * v[j]
            den += w
        out[i] = num / den
    return out


if HAS_NUMBA:
    _gaussian_smooth_nb = njit(cache=True, nogil=True)(_gaussian_smooth_loop)
