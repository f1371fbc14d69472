import time
from dataclasses import dataclass

import pytest

from faasbench.orchestrator import Campaign, CampaignConfig
from faasbench.probe.env import StorageError
from faasbench.sim.clock import MS_PER_DAY
from faasbench.sim.profile import load_preset

ACCEPTANCE_SEEDS = {"aws-like": 1, "google-like": 1, "ibm-like": 2, "azure-like": 1}


class FakeEnv:
    """Dictionary-backed execution environment for probe tests."""

    def __init__(self, proc=None, cost_ms=0.001, tier=128, disk_rate=1.0, now=0.0):
        self.proc = dict(proc or {})
        self.tmp = {}
        self.cost_ms = cost_ms
        self.memory_limit_mb = tier
        self.disk_rate = disk_rate
        self.now = now
        self.broken = False

    def read_proc(self, path):
        return self.proc.get(path)

    def _check(self):
        if self.broken:
            raise StorageError("disk gone")

    def tmp_read(self, name):
        self._check()
        v = self.tmp.get(name)
        return v if v is None or isinstance(v, str) else None

    def tmp_write(self, name, text):
        self._check()
        self.tmp[name] = text

    def tmp_remove(self, name):
        self._check()
        self.tmp.pop(name, None)

    def dd(self, name, block_size, count, mode):
        self._check()
        if mode == "write":
            self.tmp[name] = block_size * count
        elif not isinstance(self.tmp.get(name), int):
            raise StorageError("short read")
        ms = block_size * count / 2**20 / self.disk_rate * 1000.0
        self.now += ms
        return ms

    def iteration_cost_ms(self):
        return self.cost_ms

    def now_ms(self):
        return self.now

    def advance(self, ms):
        self.now += ms


@pytest.fixture
def fake_env():
    return FakeEnv


@dataclass
class MonthRun:
    records: list
    platform: object
    seconds: float


def month_campaign(name, seed, days=30, overrides=None):
    profile = load_preset(name, overrides)
    cfg = CampaignConfig(profiles=[profile], duration_ms=days * MS_PER_DAY, seed=seed)
    campaign = Campaign(cfg)
    t0 = time.perf_counter()
    records = list(campaign.run())
    return MonthRun(records, campaign.platforms[0], time.perf_counter() - t0)


@pytest.fixture(scope="session")
def month():
    """30-day campaigns per preset, run once per session."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = month_campaign(name, ACCEPTANCE_SEEDS[name])
        return cache[name]

    return get


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
