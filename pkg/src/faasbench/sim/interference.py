from __future__ import annotations

import math
from dataclasses import dataclass, field

from .clock import MS_PER_DAY, MS_PER_HOUR, VirtualTime


@dataclass(frozen=True)
class AnomalyWindow:
    start: VirtualTime
    end: VirtualTime
    severity: float

    def __post_init__(self):
        if not 0 < self.severity <= 1:
            raise ValueError(f"severity must be in (0, 1], got {self.severity}")
        if self.end <= self.start:
            raise ValueError("anomaly window must end after it starts")


@dataclass(frozen=True)
class InterferenceModel:
    amplitude: float = 0.0
    peak_hour: float = 12.0
    anomaly_windows: tuple[AnomalyWindow, ...] = field(default_factory=tuple)


def interference_multiplier(model: InterferenceModel, t: float) -> float:
    """Runtime cost factor at virtual time ``t``.

    A 24 h sinusoid peaking at ``peak_hour``. Inside an anomaly window the
    factor is divided by the window's severity, so a severity of 0.5 doubles
    runtime cost and halves throughput.
    """
    hour = (t % MS_PER_DAY) / MS_PER_HOUR
    factor = 1.0 + model.amplitude * math.sin(2.0 * math.pi * (hour - (model.peak_hour - 6.0)) / 24.0)
    for w in model.anomaly_windows:
        if w.start <= t < w.end:
            factor /= w.severity
    return factor
