from .clock import DEFAULT_START, MS_PER_DAY, MS_PER_HOUR, EventQueue, VirtualTime, as_virtual_time, to_iso
from .interference import AnomalyWindow, InterferenceModel, interference_multiplier
from .platform import (
    Execution,
    ExecutionVm,
    FunctionContainer,
    Platform,
    Pool,
    SimEnvironment,
    UnknownTierError,
    acquire_container,
    cold_start_delay,
    execute_invocation,
    provision_vm,
)
from .procfs import render_procfs
from .profile import (
    PRESETS,
    ColdStart,
    CpuSpec,
    IdStrategy,
    MemoryMapping,
    PlatformProfile,
    ProfileError,
    ReusePolicy,
    load_preset,
    load_profile,
    preset_text,
)

__all__ = [
    "AnomalyWindow",
    "ColdStart",
    "CpuSpec",
    "DEFAULT_START",
    "EventQueue",
    "Execution",
    "ExecutionVm",
    "FunctionContainer",
    "IdStrategy",
    "InterferenceModel",
    "MS_PER_DAY",
    "MS_PER_HOUR",
    "MemoryMapping",
    "PRESETS",
    "Platform",
    "PlatformProfile",
    "Pool",
    "ProfileError",
    "ReusePolicy",
    "SimEnvironment",
    "UnknownTierError",
    "VirtualTime",
    "acquire_container",
    "as_virtual_time",
    "cold_start_delay",
    "execute_invocation",
    "interference_multiplier",
    "load_preset",
    "load_profile",
    "preset_text",
    "provision_vm",
    "render_procfs",
    "to_iso",
]
