"""Records produced inside one function execution."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

UID_FILE = "faasbench-uid"
LOG_FILE = "faasbench-log"


@dataclass
class ContainerIdentity:
    container_uid: str
    is_new_container: bool
    prior_function_ids: list[str]
    boot_time_consistent: bool = True
    storage_warning: Optional[str] = None


@dataclass
class PrimeScore:
    numbers_checked: int
    primes_found: int
    budget_ms: float = 1000.0
    elapsed_ms: float = 0.0


@dataclass
class ProbeReport:
    """Everything the probe measured in one invocation.

    ``None`` means the value was not available in the environment; it is
    never a stand-in for zero.
    """

    function_id: str
    container_uid: str
    vm_id: Optional[str]
    vm_id_source: Optional[str]
    vm_id_evidence: Optional[str]
    prior_function_ids: list[str]
    start_class: str
    boot_time: Optional[int]
    cpu_model_id: Optional[int]
    cpu_mhz: Optional[float]
    cpu_times: Optional[list[float]]
    mem_total_kb: Optional[int]
    tier_mb: int
    prime_count: int
    numbers_checked: int
    disk_mb_per_s: Optional[float]
    function_runtime_ms: float
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def is_cold(self) -> bool:
        return self.start_class == "cold"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ProbeReport":
        names = {f.name for f in fields(cls)}
        missing = names - set(data) - {"errors"}
        if missing:
            raise KeyError(f"report is missing fields: {sorted(missing)}")
        return cls(**{k: data[k] for k in names if k in data})
