"""The in-function probe: system info, container identity, benchmarks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

from .env import ExecutionEnvironment, StorageError
from .primes import default_table
from .procfs import (
    ProcParseError,
    parse_cpuinfo,
    parse_meminfo,
    parse_stat,
    parse_uptime,
    sandbox_token,
)
from .report import LOG_FILE, UID_FILE, ContainerIdentity, PrimeScore, ProbeReport

log = logging.getLogger(__name__)

BLOCK_SIZE = 512 * 1024
BLOCK_COUNT = 1000
PRIME_BUDGET_MS = 1000.0
_MB = float(1 << 20)
_DD_FILE = "faasbench-dd"


def new_id(rng) -> str:
    return format(int(rng.integers(0, 1 << 48)), "012x")


@dataclass
class SystemInfo:
    cpu_model_id: Optional[int] = None
    cpu_mhz: Optional[float] = None
    mem_total_kb: Optional[int] = None
    cpu_times: Optional[list[float]] = None
    boot_time: Optional[int] = None
    vm_id: Optional[str] = None
    vm_id_source: Optional[str] = None
    vm_id_evidence: Optional[str] = None


def collect_system_info(env: ExecutionEnvironment) -> SystemInfo:
    """Read the procfs documents the environment exposes.

    Raises :class:`ProcParseError` naming the offending file.
    """
    info = SystemInfo()
    text = env.read_proc("/proc/cpuinfo")
    if text is not None:
        info.cpu_model_id, info.cpu_mhz = parse_cpuinfo(text)
    text = env.read_proc("/proc/meminfo")
    if text is not None:
        info.mem_total_kb = parse_meminfo(text)
    text = env.read_proc("/proc/stat")
    if text is not None:
        info.cpu_times, info.boot_time = parse_stat(text)
    if info.boot_time is None:
        text = env.read_proc("/proc/uptime")
        if text is not None:
            info.boot_time = int(env.now_ms() / 1000.0 - parse_uptime(text))

    text = env.read_proc("/proc/self/cgroup")
    if text is not None:
        token, line = sandbox_token(text)
        if token is not None:
            info.vm_id, info.vm_id_source, info.vm_id_evidence = token, "cgroup", line
    if info.vm_id is None:
        text = env.read_proc("/proc/machineid")
        if text is not None and text.strip():
            mid = text.strip()
            info.vm_id, info.vm_id_source, info.vm_id_evidence = mid, "machine-id", mid
    return info


def identify_container(
    env: ExecutionEnvironment,
    rng,
    function_id: str,
    boot_time: Optional[int] = None,
) -> ContainerIdentity:
    """Resolve the container UID from tmp storage and log this invocation.

    The UID file holds the UID and the boot time seen when it was written. A
    boot-time mismatch means the file cannot belong to this container, so the
    identity is discarded and the container is treated as new.
    """
    try:
        raw = env.tmp_read(UID_FILE)
        prior: list[str] = []
        consistent = True
        uid = None
        if raw is not None:
            uid, _, recorded = raw.partition("\n")
            recorded = recorded.strip()
            if boot_time is not None and recorded and recorded != str(boot_time):
                consistent = False
                uid = None
            else:
                logged = env.tmp_read(LOG_FILE) or ""
                prior = [line for line in logged.split("\n") if line]
        if uid is None:
            uid = new_id(rng)
            env.tmp_write(UID_FILE, f"{uid}\n{'' if boot_time is None else boot_time}")
        env.tmp_write(LOG_FILE, "\n".join(prior + [function_id]))
    except StorageError as exc:
        log.warning("tmp storage unavailable, using a fresh container UID: %s", exc)
        return ContainerIdentity(new_id(rng), True, [], True, storage_warning=str(exc))
    return ContainerIdentity(uid, not prior, prior, consistent)


def classify_start(identity: ContainerIdentity) -> str:
    return "cold" if identity.is_new_container else "warm"


def count_primes(env: ExecutionEnvironment, budget_ms: float = PRIME_BUDGET_MS) -> PrimeScore:
    """Check n = 2, 3, ... for primality until the time budget is spent."""
    cost = env.iteration_cost_ms()
    if cost <= 0:
        raise ValueError("iteration cost must be positive")
    iterations = math.floor(budget_ms / cost + 1e-9) if budget_ms > 0 else 0
    checked, found, used = default_table().lookup(iterations)
    elapsed = used * cost
    env.advance(elapsed)
    return PrimeScore(checked, found, budget_ms, elapsed)


def measure_disk_throughput(
    env: ExecutionEnvironment, block_size: int = BLOCK_SIZE, count: int = BLOCK_COUNT
) -> float:
    """Write ``count`` blocks to tmp, read them back; MB/s over both phases."""
    try:
        elapsed = env.dd(_DD_FILE, block_size, count, "write")
        elapsed += env.dd(_DD_FILE, block_size, count, "read")
    finally:
        try:
            env.tmp_remove(_DD_FILE)
        except StorageError:
            pass
    if elapsed <= 0:
        raise StorageError("dd reported no elapsed time")
    return 2 * block_size * count / _MB / (elapsed / 1000.0)


def run_probe(env: ExecutionEnvironment, rng) -> ProbeReport:
    """Run every probe routine and collate one report.

    A failing routine leaves its fields as None and records the error under
    ``errors``; the report itself is always produced.
    """
    started = env.now_ms()
    function_id = new_id(rng)
    errors: dict[str, str] = {}

    try:
        info = collect_system_info(env)
    except ProcParseError as exc:
        errors["system_info"] = str(exc)
        info = SystemInfo()

    identity = identify_container(env, rng, function_id, info.boot_time)
    if identity.storage_warning:
        errors["identity"] = identity.storage_warning

    score = count_primes(env)
    try:
        disk = measure_disk_throughput(env)
    except StorageError as exc:
        errors["disk"] = str(exc)
        disk = None

    return ProbeReport(
        function_id=function_id,
        container_uid=identity.container_uid,
        vm_id=info.vm_id,
        vm_id_source=info.vm_id_source,
        vm_id_evidence=info.vm_id_evidence,
        prior_function_ids=identity.prior_function_ids,
        start_class=classify_start(identity),
        boot_time=info.boot_time,
        cpu_model_id=info.cpu_model_id,
        cpu_mhz=info.cpu_mhz,
        cpu_times=info.cpu_times,
        mem_total_kb=info.mem_total_kb,
        tier_mb=env.memory_limit_mb,
        prime_count=score.primes_found,
        numbers_checked=score.numbers_checked,
        disk_mb_per_s=disk,
        function_runtime_ms=env.now_ms() - started,
        errors=errors,
    )
