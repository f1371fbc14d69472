import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from faasbench.fingerprint import (
    UNKNOWN,
    CpuidTable,
    MixedPlatformError,
    build_topology,
    decode_cpu_model,
    infer_strategy,
    resolve_vm_id,
    to_hex,
)
from faasbench.orchestrator import CampaignConfig, run_campaign
from faasbench.sim.clock import MS_PER_HOUR
from faasbench.sim.profile import IdStrategy, load_preset

# Every (platform, model id, MHz, name) row of the published CPU table.
CPU_TABLE = [
    ("AWS", 62, 2500, "Intel Xeon E5-2670 v2"),
    ("AWS", 62, 3000, "Intel Xeon E5-2690 v2"),
    ("Google", 45, 2600, "Intel Xeon E5-2670"),
    ("Google", 45, 3300, "Intel Xeon E5-1660"),
    ("Google", 62, 2500, "Intel Xeon E5-2670 v2"),
    ("Google", 63, 2300, "Intel Xeon E5-2680 v3"),
    ("Google", 79, 2200, "Intel Xeon E5-2650 v4"),
    ("Google", 85, 2000, "Intel Xeon (Skylake), model undetermined"),
    ("Google", 85, 2200, "Intel Xeon (Skylake), model undetermined"),
    ("IBM", 85, 2300, "Intel Xeon Gold 6140"),
    ("IBM", 79, 2100, "Intel Xeon E5-2683 v4"),
    ("IBM", 79, 2600, "Intel Xeon E5-2690 v4"),
    ("IBM", 79, 2200, "Intel Xeon E5-2650 v4"),
    ("IBM", 63, 2600, "Intel Xeon E5-2690 v3"),
    ("IBM", 85, 2100, "Intel Xeon Gold 6130"),
    ("IBM", 63, 2000, "Intel Xeon E5-2683 v3"),
    ("Azure", 79, 2300, "Intel Xeon E5-2673 v4"),
    ("Azure", 63, 2400, "Intel Xeon E5-2673 v3"),
    ("Azure", 85, 2600, "Intel Xeon Platinum 8171M"),
]


@pytest.mark.parametrize("platform,model,mhz,name", CPU_TABLE)
def test_decode_table_rows(platform, model, mhz, name):
    assert decode_cpu_model(model, mhz) == name


def test_decode_fallbacks():
    assert decode_cpu_model(1, 1) == UNKNOWN
    assert decode_cpu_model(79, 9999) == "Intel Xeon (Broadwell), model undetermined"


@pytest.mark.parametrize("dec,hexed", [(62, "0x3E"), (79, "0x4F"), (85, "0x55"), (45, "0x2D"), (63, "0x3F")])
def test_hex(dec, hexed):
    assert to_hex(dec) == hexed


@given(st.integers(0, 255))
def test_hex_round_trip(n):
    assert int(to_hex(n), 16) == n


def test_custom_table_and_duplicates():
    t = CpuidTable.from_csv("model_id,mhz,model_name\n1,100,Widget\n")
    assert t.decode(1, 100) == "Widget"
    assert decode_cpu_model(1, 100, t) == "Widget"
    with pytest.raises(ValueError):
        CpuidTable.from_csv("model_id,mhz,model_name\n1,100,A\n1,100,B\n")


def campaign(name, hours=2, burst=5, seed=3):
    cfg = CampaignConfig([load_preset(name)], duration_ms=hours * MS_PER_HOUR, burst_size=burst, seed=seed)
    return list(run_campaign(cfg))


def test_single_record_topology():
    rec = campaign("aws-like", hours=1, burst=1)[0]
    topo = build_topology([rec])
    assert topo.unique_vms == 1 and topo.unique_containers == 1
    assert topo.cpu_prevalence[0][1] == 100.0


def test_resolve_strategies():
    aws = campaign("aws-like", hours=1, burst=1)[0].report
    ibm = campaign("ibm-like", hours=1, burst=1)[0].report
    goo = campaign("google-like", hours=1, burst=1)[0].report
    assert resolve_vm_id(aws, IdStrategy.CGROUP_SANDBOX).value == aws.vm_id
    assert resolve_vm_id(ibm, "MachineId").value == ibm.vm_id
    assert resolve_vm_id(aws, IdStrategy.MACHINE_ID).value is None
    r = resolve_vm_id(goo, IdStrategy.CONTAINER_UID_ONLY)
    assert r.value is None and r.reason
    assert infer_strategy([goo]) is IdStrategy.CONTAINER_UID_ONLY
    assert infer_strategy([ibm]) is IdStrategy.MACHINE_ID


def test_google_counts_containers():
    topo = build_topology(campaign("google-like"))
    assert topo.unique_vms is None and topo.counted_entity == "container"
    assert topo.memory_map_observed == {t: [] for t in (128, 256, 512, 1024, 2048)}
    assert "not established" in topo.to_table()
    assert json.loads(topo.to_json())["unique_vms"] is None


def test_ibm_shares_vms():
    recs = campaign("ibm-like", burst=20)
    topo = build_topology(recs)
    assert topo.unique_vms < topo.unique_containers
    assert set(sum(topo.memory_map_observed.values(), [])) == {16384000}
    assert sum(p for _, p in topo.cpu_prevalence) == pytest.approx(100.0)


def test_mixed_platforms_rejected():
    with pytest.raises(MixedPlatformError):
        build_topology(campaign("aws-like", hours=1, burst=1) + campaign("azure-like", hours=1, burst=1))
    with pytest.raises(ValueError):
        build_topology([])
