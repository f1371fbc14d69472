"""Pseudo-procfs documents for a simulated execution VM."""
from __future__ import annotations

from typing import TYPE_CHECKING

from ..probe.procfs import USER_HZ
from .profile import IdStrategy, PlatformProfile

if TYPE_CHECKING:
    from .platform import ExecutionVm, FunctionContainer

_CONTROLLERS = ("pids", "memory", "cpu,cpuacct", "blkio", "devices", "freezer")


def _jiffies(ms: float) -> int:
    return int(ms * USER_HZ / 1000.0)


def render_procfs(
    vm: "ExecutionVm", container: "FunctionContainer", profile: PlatformProfile, now: float
) -> dict[str, str]:
    """Map of procfs path to document text, as seen from inside ``container``."""
    if container.host_vm != vm.vm_id:
        raise ValueError(f"container {container.container_id} is not hosted on vm {vm.vm_id}")
    mhz = f"{vm.cpu_mhz:.3f}"
    if profile.id_strategy is IdStrategy.CONTAINER_UID_ONLY:
        # A hardened hypervisor leaves just these two fields.
        return {"/proc/cpuinfo": f"model\t\t: {vm.cpu_model_id}\ncpu MHz\t\t: {mhz}\n"}

    ghz = vm.cpu_mhz / 1000.0
    cpuinfo = (
        "processor\t: 0\n"
        "vendor_id\t: GenuineIntel\n"
        "cpu family\t: 6\n"
        f"model\t\t: {vm.cpu_model_id}\n"
        f"model name\t: Intel(R) Xeon(R) CPU @ {ghz:.2f}GHz\n"
        "stepping\t: 4\n"
        f"cpu MHz\t\t: {mhz}\n"
        "cache size\t: 25600 KB\n"
        "\n"
    )
    free_kb = max(vm.mem_total_kb - container.tier_mb * 1024, 0)
    meminfo = (
        f"MemTotal:       {vm.mem_total_kb:>8} kB\n"
        f"MemFree:        {free_kb:>8} kB\n"
        f"MemAvailable:   {free_kb:>8} kB\n"
    )
    up_ms = max(now - vm.boot_time, 0.0)
    user, system = vm.cpu_user_ms, vm.cpu_system_ms
    idle = max(up_ms - user - system, 0.0)
    stat = (
        f"cpu  {_jiffies(user)} 0 {_jiffies(system)} {_jiffies(idle)} 0 0 0 0 0 0\n"
        f"cpu0 {_jiffies(user)} 0 {_jiffies(system)} {_jiffies(idle)} 0 0 0 0 0 0\n"
        f"btime {vm.boot_time // 1000}\n"
        f"processes {len(vm.containers)}\n"
    )
    docs = {
        "/proc/cpuinfo": cpuinfo,
        "/proc/meminfo": meminfo,
        "/proc/stat": stat,
        "/proc/uptime": f"{up_ms / 1000.0:.2f} {idle / 1000.0:.2f}\n",
    }
    if profile.id_strategy is IdStrategy.CGROUP_SANDBOX:
        docs["/proc/self/cgroup"] = "".join(
            f"{i}:{ctrl}:/sandbox-root-{vm.vm_id}/sandbox-{container.container_id}\n"
            for i, ctrl in enumerate(_CONTROLLERS, start=1)
        )
    elif profile.id_strategy is IdStrategy.MACHINE_ID:
        docs["/proc/machineid"] = vm.vm_id + "\n"
    return docs
