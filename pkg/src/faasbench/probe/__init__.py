from .core import (
    SystemInfo,
    classify_start,
    collect_system_info,
    count_primes,
    identify_container,
    measure_disk_throughput,
    run_probe,
)
from .env import ExecutionEnvironment, StorageError
from .primes import PrimeTable, count_primes_direct, is_prime, loop_iterations
from .procfs import ProcParseError
from .report import ContainerIdentity, PrimeScore, ProbeReport

__all__ = [
    "ContainerIdentity",
    "ExecutionEnvironment",
    "PrimeScore",
    "PrimeTable",
    "ProbeReport",
    "ProcParseError",
    "StorageError",
    "SystemInfo",
    "classify_start",
    "collect_system_info",
    "count_primes",
    "count_primes_direct",
    "identify_container",
    "is_prime",
    "loop_iterations",
    "measure_disk_throughput",
    "run_probe",
]
