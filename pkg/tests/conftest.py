import math
import os

import pytest
from hypothesis import HealthCheck, settings

from mass.domain import GridWorld, KinodynamicLimits, Orientation
from mass.occupancy import SafeIntervalTable
from mass.sps import make_solver
from mass.ssipp import SearchConfig, plan_single

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SQRT8 = 2 * math.sqrt(2)  # rest-to-rest time over one cell at the default limits


@pytest.fixture
def limits():
    return KinodynamicLimits()


@pytest.fixture
def corridor():
    return GridWorld.from_rows(["........"], name="corridor")


def solo(world, start, goal, o=Orientation.EAST, sps="bas", table=None, **cfg):
    lim = KinodynamicLimits()
    return plan_single(world, lim, make_solver(sps, lim), start, o, goal,
                       table or SafeIntervalTable(world), SearchConfig(**cfg))


# acceptance lines are collected here and echoed at the end of the run, so they show
# up in the log even when output capture is on
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
