"""Trial-division CPU benchmark.

The benchmark checks n = 2, 3, 4, ... for primality one at a time until a
fixed time budget runs out. Under a work meter the outcome depends only on
how many loop iterations fit in the budget, so the per-candidate iteration
costs are computed once (see ``faasbench._accel``) and every later run is a
binary search over their running sum.
"""
from __future__ import annotations

import math
import threading

import numpy as np

from .. import _accel


def is_prime(n: int) -> bool:
    """Trial division by every a with 2 <= a <= sqrt(n)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    start = 2
    limit = math.isqrt(n)
    while start <= limit:
        # divisibility: n mod start < 1
        if n % start == 0:
            return False
        start += 1
    return n >= 2


def loop_iterations(n: int) -> int:
    """Number of loop-condition evaluations ``is_prime(n)`` performs."""
    limit = math.isqrt(n)
    start = 2
    evals = 0
    while True:
        evals += 1
        if start > limit:
            return evals
        if n % start == 0:
            return evals
        start += 1


def count_primes_direct(iteration_budget: int) -> tuple[int, int]:
    """Run the counting loop literally, with an exact iteration counter.

    Returns ``(numbers_checked, primes_found)``. A candidate is only counted
    once its whole test fits inside the budget. Slow; used as the reference
    for :class:`PrimeTable`.
    """
    used = 0
    checked = 0
    found = 0
    n = 2
    while True:
        cost = loop_iterations(n)
        if used + cost > iteration_budget:
            return checked, found
        used += cost
        checked += 1
        found += is_prime(n)
        n += 1


class PrimeTable:
    """Running sums of trial-division cost and prime count, grown on demand."""

    def __init__(self, initial_n: int = 1 << 16):
        self._lock = threading.Lock()
        self._n_max = 0
        self._cum_cost = np.zeros(0, dtype=np.int64)
        self._cum_primes = np.zeros(0, dtype=np.int64)
        self._grow(initial_n)

    def _grow(self, n_max: int) -> None:
        costs, primes = _accel.trial_division_costs(n_max)
        # index i describes candidates 2 .. i + 2
        self._cum_cost = np.cumsum(costs[2:])
        self._cum_primes = np.cumsum(primes[2:].astype(np.int64))
        self._n_max = n_max

    def lookup(self, iteration_budget: int) -> tuple[int, int, int]:
        """``(numbers_checked, primes_found, iterations_used)`` for a budget."""
        if iteration_budget <= 0:
            return 0, 0, 0
        with self._lock:
            while self._cum_cost[-1] <= iteration_budget:
                self._grow(self._n_max * 2)
            cum_cost = self._cum_cost
            cum_primes = self._cum_primes
        k = int(np.searchsorted(cum_cost, iteration_budget, side="right"))
        if k == 0:
            return 0, 0, 0
        return k, int(cum_primes[k - 1]), int(cum_cost[k - 1])


_TABLE: PrimeTable | None = None


def default_table() -> PrimeTable:
    global _TABLE
    if _TABLE is None:
        _TABLE = PrimeTable()
    return _TABLE
