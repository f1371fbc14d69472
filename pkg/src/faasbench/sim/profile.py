"""Platform archetype parameters and their YAML documents."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from .clock import as_virtual_time
from .interference import AnomalyWindow, InterferenceModel

PRESETS = ("aws-like", "google-like", "ibm-like", "azure-like")


class ProfileError(ValueError):
    """The profile document is malformed or violates an invariant."""


class IdStrategy(str, enum.Enum):
    CGROUP_SANDBOX = "CgroupSandbox"
    MACHINE_ID = "MachineId"
    CONTAINER_UID_ONLY = "ContainerUidOnly"


@dataclass(frozen=True)
class CpuSpec:
    model_id: int
    mhz: float
    prevalence: float


@dataclass(frozen=True)
class MemoryMapping:
    mem_total_kb: int
    outlier_kb: Optional[int] = None
    outlier_probability: float = 0.0


@dataclass(frozen=True)
class ColdStart:
    mean_ms: float
    dispersion: float = 0.35


@dataclass(frozen=True)
class ReusePolicy:
    max_idle_lifetime_ms: int
    max_containers_per_vm: int = 10
    # Survival hazards, per hour of idleness.
    vm_recycle_probability: float = 0.0
    container_evict_probability: float = 0.0


@dataclass
class PlatformProfile:
    name: str
    region: str
    memory_tiers: list[int]
    vm_memory_map: dict[int, MemoryMapping]
    cpu_fleet: list[CpuSpec]
    cold_start: dict[int, ColdStart]
    reuse_policy: ReusePolicy
    cpu_share: dict[int, float]
    disk_rate: dict[int, float]
    interference: InterferenceModel = field(default_factory=InterferenceModel)
    id_strategy: IdStrategy = IdStrategy.CGROUP_SANDBOX
    tmp_is_memory_backed: bool = False
    unit_cost_us: float = 1.0

    def __post_init__(self):
        self.validate()
        w = np.array([c.prevalence for c in self.cpu_fleet])
        self._fleet_cdf = np.cumsum(w)
        self._fleet_cdf[-1] = 1.0
        self.reference_mhz = float(np.dot(w, [c.mhz for c in self.cpu_fleet]))

    def validate(self) -> None:
        tiers = self.memory_tiers
        if not tiers:
            raise ProfileError("memory_tiers is empty")
        if any(b <= a for a, b in zip(tiers, tiers[1:])):
            raise ProfileError(f"memory_tiers must be strictly increasing: {tiers}")
        for label, mapping in (
            ("vm_memory_map", self.vm_memory_map),
            ("cold_start", self.cold_start),
            ("cpu_share", self.cpu_share),
            ("disk_rate", self.disk_rate),
        ):
            missing = [t for t in tiers if t not in mapping]
            if missing:
                raise ProfileError(f"{label} has no entry for tiers {missing}")
        if not self.cpu_fleet:
            raise ProfileError("cpu_fleet is empty")
        total = math.fsum(c.prevalence for c in self.cpu_fleet)
        if abs(total - 1.0) > 1e-9:
            raise ProfileError(f"cpu_fleet prevalences sum to {total}, expected 1")
        if any(c.prevalence < 0 for c in self.cpu_fleet):
            raise ProfileError("negative cpu prevalence")
        for t in tiers:
            if not 0 < self.cpu_share[t] <= 1:
                raise ProfileError(f"cpu_share[{t}] must be in (0, 1]")
            if self.cold_start[t].mean_ms <= 0:
                raise ProfileError(f"cold_start[{t}] mean must be positive")
            if self.cold_start[t].dispersion < 0:
                raise ProfileError(f"cold_start[{t}] dispersion must be >= 0")
            if self.disk_rate[t] <= 0:
                raise ProfileError(f"disk_rate[{t}] must be positive")
            m = self.vm_memory_map[t]
            if not 0 <= m.outlier_probability <= 1:
                raise ProfileError(f"vm_memory_map[{t}] outlier probability out of range")
        rp = self.reuse_policy
        if rp.max_containers_per_vm < 1 or rp.max_idle_lifetime_ms < 0:
            raise ProfileError("reuse_policy limits must be positive")
        for p in (rp.vm_recycle_probability, rp.container_evict_probability):
            if not 0 <= p <= 1:
                raise ProfileError("reuse_policy probabilities must be in [0, 1]")
        if self.unit_cost_us <= 0:
            raise ProfileError("unit_cost_us must be positive")

    def sample_cpu(self, u: float) -> CpuSpec:
        return self.cpu_fleet[int(np.searchsorted(self._fleet_cdf, u, side="right"))]


def _tier_map(raw: Any, key: str) -> dict[int, Any]:
    if not isinstance(raw, Mapping):
        raise ProfileError(f"{key} must be a mapping of tier MB to values")
    return {int(k): v for k, v in raw.items()}


def _require(doc: Mapping, key: str) -> Any:
    if key not in doc:
        raise ProfileError(f"missing required key {key!r}")
    return doc[key]


def profile_from_dict(doc: Mapping[str, Any]) -> PlatformProfile:
    try:
        memory = {}
        for tier, v in _tier_map(_require(doc, "vm_memory_map"), "vm_memory_map").items():
            memory[tier] = MemoryMapping(**v) if isinstance(v, Mapping) else MemoryMapping(int(v))
        cold = {}
        for tier, v in _tier_map(_require(doc, "cold_start"), "cold_start").items():
            cold[tier] = ColdStart(**v) if isinstance(v, Mapping) else ColdStart(float(v))
        inter = doc.get("interference") or {}
        windows = tuple(
            AnomalyWindow(as_virtual_time(w["start"]), as_virtual_time(w["end"]), float(w["severity"]))
            for w in inter.get("anomaly_windows", ())
        )
        return PlatformProfile(
            name=str(_require(doc, "name")),
            region=str(doc.get("region", "")),
            memory_tiers=[int(t) for t in _require(doc, "memory_tiers")],
            vm_memory_map=memory,
            cpu_fleet=[CpuSpec(int(c["model_id"]), float(c["mhz"]), float(c["prevalence"]))
                       for c in _require(doc, "cpu_fleet")],
            cold_start=cold,
            reuse_policy=ReusePolicy(**_require(doc, "reuse_policy")),
            cpu_share={t: float(v) for t, v in _tier_map(_require(doc, "cpu_share"), "cpu_share").items()},
            disk_rate={t: float(v) for t, v in _tier_map(_require(doc, "disk_rate"), "disk_rate").items()},
            interference=InterferenceModel(
                float(inter.get("amplitude", 0.0)), float(inter.get("peak_hour", 12.0)), windows
            ),
            id_strategy=IdStrategy(doc.get("id_strategy", "CgroupSandbox")),
            tmp_is_memory_backed=bool(doc.get("tmp_is_memory_backed", False)),
            unit_cost_us=float(doc.get("unit_cost_us", 1.0)),
        )
    except ProfileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileError(f"invalid profile document: {exc}") from exc


def load_profile(config_text: str, overrides: Optional[Mapping[str, str]] = None) -> PlatformProfile:
    """Parse and validate one profile document (YAML or JSON)."""
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ProfileError(f"cannot parse profile: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be a mapping")
    for key, value in (overrides or {}).items():
        apply_override(doc, key, value)
    return profile_from_dict(doc)


def apply_override(doc: dict, dotted_key: str, value: str) -> None:
    """Set ``a.b.c=value`` inside a parsed document; value is YAML-typed."""
    *path, last = dotted_key.split(".")
    node = doc
    for part in path:
        key: Any = int(part) if part.isdigit() and int(part) in node else part
        if key not in node:
            raise ProfileError(f"override path {dotted_key!r} does not exist")
        node = node[key]
    if last.isdigit() and int(last) in node:
        last = int(last)  # type: ignore[assignment]
    node[last] = yaml.safe_load(value)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ProfileError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("faasbench.presets").joinpath(f"{name}.yaml").read_text()


def load_preset(name: str, overrides: Optional[Mapping[str, str]] = None) -> PlatformProfile:
    return load_profile(preset_text(name), overrides)
