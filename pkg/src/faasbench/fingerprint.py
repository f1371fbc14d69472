"""VM/container identity resolution, CPU decoding and topology aggregation."""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, NamedTuple, Optional, Union

from .orchestrator import InvocationRecord
from .probe.procfs import sandbox_token
from .probe.report import ProbeReport
from .sim.profile import IdStrategy

UNKNOWN = "Unknown"
UNDETERMINED = "model undetermined"


@dataclass(frozen=True)
class CpuModelEntry:
    model_id: int
    mhz: float
    model_name: str

    @property
    def model_id_hex(self) -> str:
        return to_hex(self.model_id)


def to_hex(model_id: int) -> str:
    return f"0x{model_id:02X}"


class CpuidTable:
    """Lookup keyed by (decimal model id, MHz), with a per-model family fallback."""

    def __init__(self, entries: Iterable[CpuModelEntry], families: Optional[dict[int, str]] = None):
        self.entries: dict[tuple[int, float], CpuModelEntry] = {}
        for e in entries:
            key = (e.model_id, float(e.mhz))
            if key in self.entries:
                raise ValueError(f"duplicate CPUID row for model {e.model_id} @ {e.mhz} MHz")
            self.entries[key] = e
        self.families = dict(families or {})

    @classmethod
    def from_csv(cls, text: str, families_text: Optional[str] = None) -> "CpuidTable":
        rows = [CpuModelEntry(int(r["model_id"]), float(r["mhz"]), r["model_name"].strip())
                for r in csv.DictReader(io.StringIO(text))]
        families = None
        if families_text:
            families = {int(r["model_id"]): r["family"].strip() for r in csv.DictReader(io.StringIO(families_text))}
        return cls(rows, families)

    @classmethod
    def default(cls) -> "CpuidTable":
        data = resources.files("faasbench.data")
        return cls.from_csv(
            data.joinpath("cpuid.csv").read_text(), data.joinpath("cpuid_families.csv").read_text()
        )

    def decode(self, model_id: int, mhz: float) -> str:
        hit = self.entries.get((int(model_id), float(mhz)))
        if hit is not None:
            return hit.model_name
        family = self.families.get(int(model_id))
        if family is not None:
            return f"Intel Xeon ({family}), {UNDETERMINED}"
        if any(e.model_id == model_id for e in self.entries.values()):
            return f"Intel model {to_hex(model_id)}, {UNDETERMINED}"
        return UNKNOWN


_DEFAULT_TABLE: Optional[CpuidTable] = None


def default_table() -> CpuidTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = CpuidTable.default()
    return _DEFAULT_TABLE


def decode_cpu_model(model_id: int, mhz: float, table: Optional[CpuidTable] = None) -> str:
    """Product name for a /proc/cpuinfo ``model`` and ``cpu MHz`` pair.

    Unknown model ids give ``"Unknown"``. A known model id at an unlisted
    speed gives the family with a "model undetermined" marker.
    """
    return (table or default_table()).decode(model_id, mhz)


class ResolvedId(NamedTuple):
    value: Optional[str]
    reason: Optional[str] = None


def resolve_vm_id(report: ProbeReport, strategy: Union[IdStrategy, str]) -> ResolvedId:
    strategy = IdStrategy(strategy)
    if strategy is IdStrategy.CONTAINER_UID_ONLY:
        return ResolvedId(None, "platform hides VM identity; count containers instead")
    if strategy is IdStrategy.CGROUP_SANDBOX:
        if report.vm_id_source != "cgroup" or not report.vm_id_evidence:
            return ResolvedId(None, "no sandbox-root entry in /proc/self/cgroup")
        token, _ = sandbox_token(report.vm_id_evidence)
        if token is None:
            return ResolvedId(None, "cgroup evidence has no sandbox-root token")
        return ResolvedId(token)
    if report.vm_id_source != "machine-id" or not report.vm_id_evidence:
        return ResolvedId(None, "no /proc/machineid content")
    return ResolvedId(report.vm_id_evidence.strip())


def infer_strategy(reports: Iterable[ProbeReport]) -> IdStrategy:
    sources = Counter(r.vm_id_source for r in reports)
    if sources.get("cgroup"):
        return IdStrategy.CGROUP_SANDBOX
    if sources.get("machine-id"):
        return IdStrategy.MACHINE_ID
    return IdStrategy.CONTAINER_UID_ONLY


class MixedPlatformError(ValueError):
    pass


@dataclass
class TopologyReport:
    platform: str
    total_invocations: int
    unique_vms: Optional[int]
    unique_containers: int
    cpu_prevalence: list[tuple[str, float]]
    memory_map_observed: dict[int, list[int]]
    identity_strategy_used: str
    counted_entity: str = "vm"
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["cpu_prevalence"] = [{"model_name": n, "percent": p} for n, p in self.cpu_prevalence]
        d["memory_map_observed"] = {str(k): v for k, v in self.memory_map_observed.items()}
        return json.dumps(d, indent=2)

    def to_table(self) -> str:
        vms = "not established" if self.unique_vms is None else str(self.unique_vms)
        lines = [
            f"platform            {self.platform}",
            f"invocations         {self.total_invocations}",
            f"unique VMs          {vms}",
            f"unique containers   {self.unique_containers}",
            f"identity strategy   {self.identity_strategy_used}",
            f"prevalence counted  per {self.counted_entity}",
            "",
            f"{'CPU model':<44}{'percent':>9}",
        ]
        lines += [f"{name:<44}{pct:>9.2f}" for name, pct in self.cpu_prevalence]
        lines += ["", f"{'tier MB':<10}MemTotal kB"]
        for tier, kbs in sorted(self.memory_map_observed.items()):
            lines.append(f"{tier:<10}{', '.join(str(k) for k in kbs) or '(not exposed)'}")
        return "\n".join(lines) + "\n"


def build_topology(
    records: Iterable[InvocationRecord], table: Optional[CpuidTable] = None
) -> TopologyReport:
    """Aggregate one platform's records into a topology fingerprint.

    CPU prevalence is counted once per VM (or per container when the VM
    cannot be identified), using the first observation of each.
    """
    records = list(records)
    if not records:
        raise ValueError("dataset is empty")
    platforms = {r.platform for r in records}
    if len(platforms) > 1:
        raise MixedPlatformError(f"dataset mixes platforms: {sorted(platforms)}")
    reports = [r.report for r in records]
    strategy = infer_strategy(reports)

    containers = {r.container_uid for r in reports}
    seen: dict[str, tuple[Optional[int], Optional[float]]] = {}
    memory: dict[int, set[int]] = {}
    vm_ids: set[str] = set()
    for rep in reports:
        vm = resolve_vm_id(rep, strategy).value
        if vm is not None:
            vm_ids.add(vm)
        key = vm if strategy is not IdStrategy.CONTAINER_UID_ONLY else rep.container_uid
        if key is not None and key not in seen:
            seen[key] = (rep.cpu_model_id, rep.cpu_mhz)
        mem = memory.setdefault(rep.tier_mb, set())
        if rep.mem_total_kb is not None:
            mem.add(rep.mem_total_kb)

    names = Counter(
        decode_cpu_model(m, mhz, table) if m is not None and mhz is not None else UNKNOWN
        for m, mhz in seen.values()
    )
    total = sum(names.values())
    prevalence = sorted(((n, 100.0 * c / total) for n, c in names.items()), key=lambda x: (-x[1], x[0]))

    notes = []
    if strategy is IdStrategy.CONTAINER_UID_ONLY:
        notes.append("VM identity not established; prevalence and counts are per container")
    return TopologyReport(
        platform=platforms.pop(),
        total_invocations=len(records),
        unique_vms=len(vm_ids) if strategy is not IdStrategy.CONTAINER_UID_ONLY else None,
        unique_containers=len(containers),
        cpu_prevalence=prevalence,
        memory_map_observed={t: sorted(v) for t, v in sorted(memory.items())},
        identity_strategy_used=strategy.value,
        counted_entity="container" if strategy is IdStrategy.CONTAINER_UID_ONLY else "vm",
        notes=notes,
    )
