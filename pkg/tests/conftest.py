import math

import pytest

from orbitauth.experiment import preset_config
from orbitauth.orbital_mechanics import R_EARTH, GroundStation, KeplerianElements


@pytest.fixture(scope="session")
def station():
    return GroundStation.from_degrees(35.0, 129.0)


@pytest.fixture(scope="session")
def leo():
    """600 km circular orbit with generic angles."""
    return KeplerianElements(R_EARTH + 600e3, 0.0, math.radians(53), 1.1, 0.3, 0.7, 0.0)


@pytest.fixture(scope="session")
def preset():
    cache = {}

    def get(name, altitude=1200e3):
        key = (name, altitude)
        if key not in cache:
            cfg = preset_config(name, altitude)
            cache[key] = (cfg, cfg.materialize())
        return cache[key]

    return get


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the body fails the line if it raises."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    class Recorder:
        def __init__(self):
            self.label = request.node.name
            self.detail = ""
            self.ok = False

        def __call__(self, label, ok, detail=""):
            self.label, self.ok, self.detail = label, bool(ok), detail
            assert ok, f"{label}: {detail}"

    rec = Recorder()
    yield rec
    lines.append(f"{'PASS' if rec.ok else 'FAIL'}  {rec.label}  {rec.detail}".rstrip())


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
