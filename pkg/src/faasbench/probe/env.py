"""The execution-environment surface the probe is written against.

The simulator provides one implementation. A host adapter reading the real
``/proc`` and ``/tmp`` would implement the same methods.
"""
from __future__ import annotations

from typing import Optional, Protocol


class StorageError(OSError):
    """Temporary storage could not be read or written."""


class ExecutionEnvironment(Protocol):
    memory_limit_mb: int

    def read_proc(self, path: str) -> Optional[str]:
        """Text of a procfs document, or None when it is not exposed."""

    def tmp_read(self, name: str) -> Optional[str]:
        """Contents of a tmp file, None if absent. Raises StorageError."""

    def tmp_write(self, name: str, text: str) -> None: ...

    def tmp_remove(self, name: str) -> None: ...

    def dd(self, name: str, block_size: int, count: int, mode: str) -> float:
        """Copy ``count`` blocks to (``mode='write'``) or from (``'read'``)
        a tmp file; returns elapsed milliseconds and advances the clock."""

    def iteration_cost_ms(self) -> float:
        """Current cost of one trial-division loop iteration."""

    def now_ms(self) -> float: ...

    def advance(self, ms: float) -> None: ...
