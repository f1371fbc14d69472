"""Execution VMs, function containers and the reuse-aware pool."""
from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..probe.core import run_probe
from ..probe.env import StorageError
from ..probe.report import ProbeReport
from .clock import MS_PER_HOUR, VirtualTime
from .interference import interference_multiplier
from .procfs import render_procfs
from .profile import PlatformProfile

_MB = float(1 << 20)


class UnknownTierError(ValueError):
    pass


def _hex_id(rng: np.random.Generator) -> str:
    return format(int(rng.integers(0, 1 << 63)), "016x")


@dataclass(eq=False)
class ExecutionVm:
    vm_id: str
    tier_mb: int
    boot_time: VirtualTime
    cpu_model_id: int
    cpu_mhz: float
    mem_total_kb: int
    cpu_user_ms: float = 0.0
    cpu_system_ms: float = 0.0
    containers: set[str] = field(default_factory=set)
    active_until: float = 0.0
    checked_at: float = 0.0
    alive: bool = True

    @property
    def cpu_times(self) -> tuple[float, float, float]:
        """(user, system, idle) ms accumulated up to the last activity."""
        idle = max(self.active_until - self.boot_time - self.cpu_user_ms - self.cpu_system_ms, 0.0)
        return self.cpu_user_ms, self.cpu_system_ms, idle


@dataclass(eq=False)
class FunctionContainer:
    container_id: str
    host_vm: str
    tier_mb: int
    created_at: VirtualTime
    last_used: float
    vm: ExecutionVm = field(repr=False)
    tmp_files: dict[str, object] = field(default_factory=dict)
    prior_function_ids: list[str] = field(default_factory=list)
    busy_until: float = 0.0
    checked_at: float = 0.0
    alive: bool = True


def provision_vm(profile: PlatformProfile, tier: int, now: VirtualTime, rng: np.random.Generator) -> ExecutionVm:
    """Boot a VM for ``tier`` with a CPU drawn from the fleet mix."""
    if tier not in profile.vm_memory_map:
        raise UnknownTierError(f"tier {tier} MB is not offered by {profile.name}")
    cpu = profile.sample_cpu(rng.random())
    mapping = profile.vm_memory_map[tier]
    mem = mapping.mem_total_kb
    if mapping.outlier_kb is not None and mapping.outlier_probability > 0:
        if rng.random() < mapping.outlier_probability:
            mem = mapping.outlier_kb
    return ExecutionVm(_hex_id(rng), tier, now, cpu.model_id, cpu.mhz, mem, active_until=now, checked_at=now)


def cold_start_delay(profile: PlatformProfile, tier: int, rng: np.random.Generator) -> float:
    """Log-normal spin-up delay whose mean is the configured mean."""
    try:
        cs = profile.cold_start[tier]
    except KeyError:
        raise UnknownTierError(f"tier {tier} MB is not offered by {profile.name}") from None
    if cs.dispersion == 0:
        return cs.mean_ms
    mu = math.log(cs.mean_ms) - 0.5 * cs.dispersion**2
    return float(rng.lognormal(mu, cs.dispersion))


def _survives(q: float, idle_ms: float, rng: np.random.Generator) -> bool:
    if q <= 0 or idle_ms <= 0:
        return True
    return rng.random() < (1.0 - q) ** (idle_ms / MS_PER_HOUR)


class _TierPool:
    __slots__ = ("idle", "busy", "open_vms", "seq")

    def __init__(self) -> None:
        self.idle: list[FunctionContainer] = []  # last_used ascending; top is most recent
        self.busy: list[tuple[float, int, FunctionContainer]] = []
        self.open_vms: dict[str, ExecutionVm] = {}
        self.seq = itertools.count()


class Pool:
    """Every live VM and container of one platform."""

    def __init__(self, profile: PlatformProfile):
        self.profile = profile
        self.tiers = {t: _TierPool() for t in profile.memory_tiers}
        self.vms: dict[str, ExecutionVm] = {}
        self._containers: dict[str, FunctionContainer] = {}
        self.containers_created = 0
        self.vms_provisioned = 0
        self.vm_provisions: Counter = Counter()  # (tier, model, mhz, mem_kb) -> count

    def _tier(self, tier: int) -> _TierPool:
        try:
            return self.tiers[tier]
        except KeyError:
            raise UnknownTierError(f"tier {tier} MB is not offered by {self.profile.name}") from None

    def _kill(self, c: FunctionContainer) -> None:
        if not c.alive:
            return
        c.alive = False
        c.tmp_files.clear()
        self._containers.pop(c.container_id, None)
        vm = c.vm
        vm.containers.discard(c.container_id)
        if not vm.alive:
            return
        tp = self.tiers[c.tier_mb]
        if not vm.containers:
            vm.alive = False
            tp.open_vms.pop(vm.vm_id, None)
            self.vms.pop(vm.vm_id, None)
        elif len(vm.containers) < self.profile.reuse_policy.max_containers_per_vm:
            tp.open_vms.setdefault(vm.vm_id, vm)

    def _recycle_vm(self, vm: ExecutionVm) -> None:
        tp = self.tiers[vm.tier_mb]
        vm.alive = False
        tp.open_vms.pop(vm.vm_id, None)
        self.vms.pop(vm.vm_id, None)
        for cid in vm.containers:
            c = self._containers.pop(cid)
            c.alive = False
            c.tmp_files.clear()
        vm.containers.clear()

    def _release_finished(self, tp: _TierPool, now: float) -> None:
        while tp.busy and tp.busy[0][0] <= now:
            _, _, c = heapq.heappop(tp.busy)
            if c.alive:
                tp.idle.append(c)

    def _take_warm(self, tp: _TierPool, now: float, rng: np.random.Generator) -> Optional[FunctionContainer]:
        policy = self.profile.reuse_policy
        while tp.idle:
            c = tp.idle.pop()
            if not c.alive:
                continue
            if now - c.last_used > policy.max_idle_lifetime_ms:
                # idle stack is ordered by last use, everything below is older
                self._kill(c)
                for old in tp.idle:
                    self._kill(old)
                tp.idle.clear()
                return None
            vm = c.vm
            if vm.active_until <= now:
                idle_ms = now - max(vm.active_until, vm.checked_at)
                vm.checked_at = now
                if not _survives(policy.vm_recycle_probability, idle_ms, rng):
                    self._recycle_vm(vm)
                    continue
            idle_ms = now - max(c.last_used, c.checked_at)
            c.checked_at = now
            if not _survives(policy.container_evict_probability, idle_ms, rng):
                self._kill(c)
                continue
            return c
        return None

    def _new_container(self, tp: _TierPool, tier: int, now: VirtualTime, rng: np.random.Generator) -> FunctionContainer:
        vm = None
        while tp.open_vms:
            candidate = next(iter(tp.open_vms.values()))
            if candidate.active_until <= now:
                idle_ms = now - max(candidate.active_until, candidate.checked_at)
                candidate.checked_at = now
                if not _survives(self.profile.reuse_policy.vm_recycle_probability, idle_ms, rng):
                    self._recycle_vm(candidate)
                    continue
            vm = candidate
            break
        if vm is None:
            vm = provision_vm(self.profile, tier, now, rng)
            self.vms[vm.vm_id] = vm
            self.vms_provisioned += 1
            self.vm_provisions[(tier, vm.cpu_model_id, vm.cpu_mhz, vm.mem_total_kb)] += 1
            tp.open_vms[vm.vm_id] = vm
        c = FunctionContainer(_hex_id(rng), vm.vm_id, tier, now, float(now), vm, checked_at=float(now))
        vm.containers.add(c.container_id)
        self._containers[c.container_id] = c
        if len(vm.containers) >= self.profile.reuse_policy.max_containers_per_vm:
            tp.open_vms.pop(vm.vm_id, None)
        self.containers_created += 1
        return c

    def acquire(self, tier: int, now: VirtualTime, rng: np.random.Generator) -> tuple[FunctionContainer, bool]:
        tp = self._tier(tier)
        self._release_finished(tp, now)
        c = self._take_warm(tp, now, rng)
        if c is not None:
            return c, False
        return self._new_container(tp, tier, now, rng), True

    def hold(self, c: FunctionContainer, until: float) -> None:
        """Mark ``c`` busy until ``until``; it returns to the idle stack after."""
        tp = self.tiers[c.tier_mb]
        c.busy_until = until
        c.last_used = until
        c.checked_at = until
        vm = c.vm
        vm.active_until = max(vm.active_until, until)
        heapq.heappush(tp.busy, (until, next(tp.seq), c))

    def live_containers(self, tier: Optional[int] = None) -> list[FunctionContainer]:
        out = []
        for t, tp in self.tiers.items():
            if tier is not None and t != tier:
                continue
            out.extend(c for c in tp.idle if c.alive)
            out.extend(c for _, _, c in tp.busy if c.alive)
        return out


def acquire_container(
    profile: PlatformProfile, pool: Pool, tier: int, now: VirtualTime, rng: np.random.Generator
) -> tuple[FunctionContainer, bool]:
    """A warm container if one survives, otherwise a new one (``is_new``)."""
    if pool.profile is not profile:
        raise ValueError("pool belongs to a different profile")
    return pool.acquire(tier, now, rng)


class SimEnvironment:
    """What a function sees while it runs inside a simulated container."""

    def __init__(self, profile: PlatformProfile, vm: ExecutionVm, container: FunctionContainer, start: float):
        self.profile = profile
        self.vm = vm
        self.container = container
        self.memory_limit_mb = container.tier_mb
        self._now = start
        self._docs: Optional[dict[str, str]] = None
        self.fail_storage = False
        self._speed = profile.cpu_share[container.tier_mb] * vm.cpu_mhz / profile.reference_mhz

    def now_ms(self) -> float:
        return self._now

    def advance(self, ms: float) -> None:
        if ms < 0:
            raise ValueError("time cannot run backwards")
        self._now += ms
        self.vm.cpu_user_ms += ms

    def multiplier(self) -> float:
        return interference_multiplier(self.profile.interference, self._now)

    def iteration_cost_ms(self) -> float:
        return self.profile.unit_cost_us / 1000.0 * self.multiplier() / self._speed

    def read_proc(self, path: str) -> Optional[str]:
        if self._docs is None:
            self._docs = render_procfs(self.vm, self.container, self.profile, self._now)
        return self._docs.get(path)

    def _check_storage(self) -> None:
        if self.fail_storage:
            raise StorageError("tmp storage unavailable")

    def tmp_read(self, name: str) -> Optional[str]:
        self._check_storage()
        data = self.container.tmp_files.get(name)
        if data is None:
            return None
        if not isinstance(data, bytes):
            raise StorageError(f"{name} is not a text file")
        return data.decode()

    def tmp_write(self, name: str, text: str) -> None:
        self._check_storage()
        self.container.tmp_files[name] = text.encode()

    def tmp_remove(self, name: str) -> None:
        self._check_storage()
        self.container.tmp_files.pop(name, None)

    def dd(self, name: str, block_size: int, count: int, mode: str) -> float:
        self._check_storage()
        nbytes = block_size * count
        if mode == "write":
            # Bulk data is tracked by size only.
            self.container.tmp_files[name] = nbytes
        elif mode == "read":
            size = self.container.tmp_files.get(name)
            if not isinstance(size, int) or size < nbytes:
                raise StorageError(f"{name}: short read")
        else:
            raise ValueError(f"unknown dd mode {mode!r}")
        rate = self.profile.disk_rate[self.container.tier_mb]
        elapsed = nbytes / _MB / rate * 1000.0 * self.multiplier()
        self._now += elapsed
        self.vm.cpu_system_ms += elapsed
        return elapsed


@dataclass
class Execution:
    """Simulator-side outcome of one invocation."""

    request_time: VirtualTime
    response_time: VirtualTime
    start_lag_ms: float
    is_new: bool
    container: FunctionContainer
    vm: ExecutionVm
    report: ProbeReport
    env: SimEnvironment = field(repr=False)


def execute_invocation(
    profile: PlatformProfile,
    pool: Pool,
    tier: int,
    request_time: VirtualTime,
    rng: np.random.Generator,
) -> Execution:
    container, is_new = acquire_container(profile, pool, tier, request_time, rng)
    lag = cold_start_delay(profile, tier, rng) if is_new else 0.0
    vm = container.vm
    env = SimEnvironment(profile, vm, container, request_time + lag)
    report = run_probe(env, rng)
    container.prior_function_ids.append(report.function_id)
    response = request_time + math.ceil(env.now_ms() - request_time)
    pool.hold(container, float(response))
    return Execution(request_time, response, lag, is_new, container, vm, report, env)


class Platform:
    """A profile, its pool and its random stream, driven by one caller."""

    def __init__(self, profile: PlatformProfile, rng: np.random.Generator):
        self.profile = profile
        self.rng = rng
        self.pool = Pool(profile)
        self.invocations = 0

    def invoke(self, tier: int, request_time: VirtualTime) -> Execution:
        self.invocations += 1
        return execute_invocation(self.profile, self.pool, tier, request_time, self.rng)
