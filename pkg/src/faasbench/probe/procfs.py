"""Parsers for the handful of procfs documents the probe reads."""
from __future__ import annotations

import re
from typing import Optional

USER_HZ = 100

_SANDBOX_RE = re.compile(r"sandbox-root-([0-9A-Za-z]+)")


class ProcParseError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _key_values(path: str, text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            if out:
                break  # only the first processor block matters
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ProcParseError(path, f"line {lineno} has no ':' separator")
        out.setdefault(key.strip(), value.strip())
    return out


def parse_cpuinfo(text: str, path: str = "/proc/cpuinfo") -> tuple[Optional[int], Optional[float]]:
    """Return ``(model, cpu MHz)`` from the first processor block."""
    kv = _key_values(path, text)
    try:
        model = int(kv["model"]) if "model" in kv else None
        mhz = float(kv["cpu MHz"]) if "cpu MHz" in kv else None
    except ValueError as exc:
        raise ProcParseError(path, str(exc)) from None
    return model, mhz


def parse_meminfo(text: str, path: str = "/proc/meminfo") -> Optional[int]:
    kv = _key_values(path, text)
    raw = kv.get("MemTotal")
    if raw is None:
        return None
    parts = raw.split()
    if len(parts) != 2 or parts[1] != "kB" or not parts[0].isdigit():
        raise ProcParseError(path, f"unexpected MemTotal value {raw!r}")
    return int(parts[0])


def parse_stat(text: str, path: str = "/proc/stat") -> tuple[Optional[list[float]], Optional[int]]:
    """Aggregate cpu (user, system, idle) in ms, and ``btime`` in epoch seconds."""
    times = None
    btime = None
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "cpu":
                # user nice system idle ...
                if len(parts) < 5:
                    raise ProcParseError(path, "cpu line has too few columns")
                jiffies = [int(v) for v in parts[1:5]]
                scale = 1000.0 / USER_HZ
                times = [jiffies[0] * scale, jiffies[2] * scale, jiffies[3] * scale]
            elif parts[0] == "btime":
                btime = int(parts[1])
        except (ValueError, IndexError) as exc:
            raise ProcParseError(path, str(exc)) from None
    return times, btime


def parse_uptime(text: str, path: str = "/proc/uptime") -> float:
    try:
        return float(text.split()[0])
    except (ValueError, IndexError):
        raise ProcParseError(path, f"cannot read uptime from {text!r}") from None


def sandbox_token(cgroup_text: str) -> tuple[Optional[str], Optional[str]]:
    """Find the ``sandbox-root-<token>`` entry; return ``(token, line)``."""
    for line in cgroup_text.splitlines():
        m = _SANDBOX_RE.search(line)
        if m:
            return m.group(1), line
    return None, None
