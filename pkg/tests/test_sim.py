import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faasbench.probe import core
from faasbench.probe.procfs import parse_cpuinfo, parse_meminfo, parse_stat
from faasbench.sim import platform as plat
from faasbench.sim.clock import DEFAULT_START, MS_PER_DAY, MS_PER_HOUR, EventQueue, as_virtual_time, to_iso
from faasbench.sim.interference import AnomalyWindow, InterferenceModel, interference_multiplier
from faasbench.sim.procfs import render_procfs
from faasbench.sim.profile import PRESETS, IdStrategy, ProfileError, load_preset, load_profile, preset_text

NOON = DEFAULT_START + 12 * MS_PER_HOUR


# clock ---------------------------------------------------------------------

def test_iso_round_trip():
    assert to_iso(DEFAULT_START) == "2019-10-01T00:00:00.000Z"
    assert as_virtual_time("2019-10-01T00:00:00Z") == DEFAULT_START
    with pytest.raises(ValueError):
        as_virtual_time(-1)


def test_event_queue_orders_by_time_then_insertion():
    q = EventQueue()
    q.push(5, "b")
    q.push(1, "a")
    q.push(5, "c")
    assert [p for _, p in q.drain()] == ["a", "b", "c"]
    with pytest.raises(ValueError):
        q.push(4, "late")


# interference --------------------------------------------------------------

def test_multiplier_examples():
    m = InterferenceModel(amplitude=0.1, peak_hour=12)
    assert interference_multiplier(m, NOON) == pytest.approx(1.1)
    assert interference_multiplier(m, NOON - 12 * MS_PER_HOUR) == pytest.approx(0.9)
    assert interference_multiplier(m, NOON - 6 * MS_PER_HOUR) == pytest.approx(1.0)


def test_anomaly_window_scales_cost():
    w = AnomalyWindow(NOON - MS_PER_HOUR, NOON + MS_PER_HOUR, 0.5)
    m = InterferenceModel(0.0, 12, (w,))
    assert interference_multiplier(m, NOON) == pytest.approx(2.0)
    assert interference_multiplier(m, NOON + MS_PER_HOUR) == 1.0
    with pytest.raises(ValueError):
        AnomalyWindow(0, 10, 0.0)


@settings(max_examples=60)
@given(st.floats(0, 0.9), st.floats(0, 24), st.integers(0, 60 * MS_PER_DAY))
def test_multiplier_periodic_and_bounded(a, peak, t):
    m = InterferenceModel(a, peak)
    x = interference_multiplier(m, t)
    assert x == pytest.approx(interference_multiplier(m, t + MS_PER_DAY), abs=1e-9)
    assert 1 - a - 1e-12 <= x <= 1 + a + 1e-12


# profiles ------------------------------------------------------------------

@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    p = load_preset(name)
    assert p.name == name
    assert math.isclose(math.fsum(c.prevalence for c in p.cpu_fleet), 1.0)


def test_aws_memory_map():
    p = load_preset("aws-like")
    assert {t: m.mem_total_kb for t, m in p.vm_memory_map.items()} == {
        128: 192484, 256: 331740, 512: 633804, 1024: 1190860, 2048: 3230668}
    assert p.vm_memory_map[1024].outlier_kb == 1717196


def test_prevalence_must_sum_to_one():
    text = preset_text("azure-like").replace("prevalence: 0.6869", "prevalence: 0.5869")
    with pytest.raises(ProfileError, match="sum"):
        load_profile(text)


def test_bad_profiles():
    with pytest.raises(ProfileError):
        load_profile("name: x\n")
    with pytest.raises(ProfileError):
        load_profile("[1, 2]")
    with pytest.raises(ProfileError, match="does not exist"):
        load_preset("aws-like", {"nope.field": "1"})
    with pytest.raises(ProfileError, match="unknown preset"):
        load_preset("oracle-like")


def test_override():
    p = load_preset("aws-like", {"interference.amplitude": "0.2", "cold_start.128.dispersion": "0"})
    assert p.interference.amplitude == 0.2
    assert p.cold_start[128].dispersion == 0


# VMs, containers, procfs ---------------------------------------------------

def _vm_and_container(name, tier=128, seed=0):
    p = load_preset(name)
    pool = plat.Pool(p)
    c, new = pool.acquire(tier, DEFAULT_START, np.random.default_rng(seed))
    return p, pool, c


def test_render_cgroup_profile_parses():
    p, _, c = _vm_and_container("aws-like")
    docs = render_procfs(c.vm, c, p, DEFAULT_START + 5000)
    assert parse_cpuinfo(docs["/proc/cpuinfo"]) == (62, c.vm.cpu_mhz)
    assert parse_meminfo(docs["/proc/meminfo"]) == c.vm.mem_total_kb
    assert parse_stat(docs["/proc/stat"])[1] == DEFAULT_START // 1000
    assert f"sandbox-root-{c.vm.vm_id}" in docs["/proc/self/cgroup"]


def test_render_container_only_profile():
    p, _, c = _vm_and_container("google-like")
    docs = render_procfs(c.vm, c, p, DEFAULT_START)
    assert set(docs) == {"/proc/cpuinfo"}


def test_render_machine_id_profile():
    p, _, c = _vm_and_container("ibm-like")
    assert render_procfs(c.vm, c, p, DEFAULT_START)["/proc/machineid"].strip() == c.vm.vm_id


def test_cold_start_mean_and_zero_dispersion():
    p = load_preset("aws-like", {"cold_start.256.dispersion": "0"})
    rng = np.random.default_rng(5)
    assert plat.cold_start_delay(p, 256, rng) == 221.0
    draws = [plat.cold_start_delay(p, 128, rng) for _ in range(20000)]
    assert np.mean(draws) == pytest.approx(346.73, rel=0.02)
    with pytest.raises(plat.UnknownTierError):
        plat.cold_start_delay(p, 3000, rng)


def test_platform_rejects_unknown_tier():
    platform = plat.Platform(load_preset("azure-like"), np.random.default_rng(0))
    with pytest.raises(plat.UnknownTierError):
        platform.invoke(128, DEFAULT_START)


def test_warm_reuse_keeps_identity():
    platform = plat.Platform(load_preset("google-like"), np.random.default_rng(0))
    a = platform.invoke(128, DEFAULT_START)
    b = platform.invoke(128, a.response_time)
    assert a.is_new and not b.is_new
    assert b.report.container_uid == a.report.container_uid
    assert b.report.prior_function_ids == [a.report.function_id]
    assert b.start_lag_ms == 0


def test_idle_lifetime_cutoff():
    p = load_preset("google-like", {"reuse_policy.container_evict_probability": "0"})
    platform = plat.Platform(p, np.random.default_rng(0))
    a = platform.invoke(128, DEFAULT_START)
    late = a.response_time + p.reuse_policy.max_idle_lifetime_ms + 1
    assert platform.invoke(128, late).is_new


def test_busy_container_not_shared():
    platform = plat.Platform(load_preset("google-like"), np.random.default_rng(0))
    execs = [platform.invoke(256, DEFAULT_START) for _ in range(5)]
    assert len({e.report.container_uid for e in execs}) == 5
    assert all(e.is_new for e in execs)


def test_vm_capacity_respected():
    p = load_preset("ibm-like")
    platform = plat.Platform(p, np.random.default_rng(1))
    execs = [platform.invoke(128, DEFAULT_START) for _ in range(20)]
    per_vm = {}
    for e in execs:
        per_vm.setdefault(e.vm.vm_id, set()).add(e.container.container_id)
    assert max(len(s) for s in per_vm.values()) <= p.reuse_policy.max_containers_per_vm


def test_tmp_isolated_between_containers():
    platform = plat.Platform(load_preset("ibm-like"), np.random.default_rng(2))
    a = platform.invoke(128, DEFAULT_START)
    b = platform.invoke(128, DEFAULT_START)
    assert a.container is not b.container
    assert a.container.tmp_files is not b.container.tmp_files
    assert b.report.prior_function_ids == []


def test_prior_log_grows_per_container():
    platform = plat.Platform(load_preset("google-like"), np.random.default_rng(4))
    seen = {}
    t = DEFAULT_START
    for _ in range(30):
        e = platform.invoke(512, t)
        uid = e.report.container_uid
        n = len(e.report.prior_function_ids)
        assert n > seen.get(uid, -1)
        seen[uid] = n
        t = e.response_time + 10 * 60_000


def test_storage_failure_keeps_report():
    p = load_preset("aws-like")
    pool = plat.Pool(p)
    rng = np.random.default_rng(0)
    c, _ = pool.acquire(128, DEFAULT_START, rng)
    env = plat.SimEnvironment(p, c.vm, c, DEFAULT_START)
    env.fail_storage = True
    r = core.run_probe(env, rng)
    assert r.disk_mb_per_s is None and "disk" in r.errors and r.numbers_checked > 0


def test_response_after_request():
    platform = plat.Platform(load_preset("aws-like"), np.random.default_rng(0))
    e = platform.invoke(2048, DEFAULT_START)
    assert e.response_time >= e.request_time + e.start_lag_ms + e.report.function_runtime_ms - 1e-6
    assert e.report.disk_mb_per_s <= 3.0
