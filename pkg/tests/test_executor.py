import pytest

from conftest import solo
from mass.domain import GridWorld, MoveSegment, Orientation, Plan, move_action, wait_action
from mass.executor import (check_dynamics, makespan, relative_soc, sum_of_cost, throughput,
                           validate)
from mass.mapf import Agent, Instance, PlannerConfig, solve, unconstrained_arrivals
from mass.profiles import PiecewiseProfile


def stay(agent, v, lo, hi):
    return Plan(agent, v, Orientation.EAST, [wait_action(lo, hi - lo, v, Orientation.EAST)],
                start_time=lo, holds_end=False)


def test_single_valid_plan(limits):
    w = GridWorld.from_rows(["....", ".@@.", "...."])
    p = solo(w, 0, w.vertex(3, 2))
    rep = validate([p], w, limits)
    assert rep.ok and rep.methods_agree


def test_two_agents_same_cell(limits):
    w = GridWorld.empty(3, 3)
    rep = validate([stay(0, 4, 0, 5), stay(1, 4, 2, 6)], w, limits)
    assert not rep.ok
    assert {v.kind for v in rep.violations} == {"collision"}
    assert rep.analytic_pairs == rep.sampled_pairs == {(0, 1)}


def test_overspeed_profile_flagged(limits):
    w = GridWorld.empty(5, 1)
    # 4 cells in 2 s needs a 4 cells/s peak
    prof = PiecewiseProfile([0.0, 1.0, 2.0], [0.0, 4.0, 0.0])
    a = move_action(0.0, MoveSegment((0, 1, 2, 3, 4), Orientation.EAST), prof)
    p = Plan(0, 0, Orientation.EAST, [a])
    assert check_dynamics(p, limits)
    rep = validate([p], w, limits)
    assert any(v.kind == "dynamics" for v in rep.violations)


def test_teleport_flagged(limits):
    w = GridWorld.empty(3, 1)
    p = Plan(0, 0, Orientation.EAST, [wait_action(0.0, 1.0, 2, Orientation.EAST)])
    rep = validate([p], w, limits)
    assert [v.kind for v in rep.violations] == ["continuity"]


def test_horizon_clips_checks(limits):
    w = GridWorld.empty(3, 1)
    rep = validate([stay(0, 1, 0, 5), stay(1, 1, 6, 9)], w, limits, horizon=5.5)
    assert rep.ok


def test_metrics_basic():
    ps = [stay(0, 0, 0, 2), stay(1, 1, 0, 5)]
    assert sum_of_cost(ps) == 7 and makespan(ps) == 5
    assert makespan([]) == 0.0
    assert relative_soc(ps, [2, 5]) == 1.0


def test_relative_soc_independent_agents():
    w = GridWorld.empty(6, 6)
    inst = Instance(w, [Agent(0, 0, 5), Agent(1, w.vertex(0, 5), w.vertex(5, 5))])
    res = solve(inst, PlannerConfig())
    assert relative_soc(res.plans, unconstrained_arrivals(inst, PlannerConfig())) == pytest.approx(1.0)


def test_relative_soc_forced_wait():
    # two agents through one crossing: the later one waits w seconds, nothing else changes
    w = GridWorld.from_rows(["@@.@@", "@@.@@", ".....", "@@.@@", "@@.@@"])
    inst = Instance(w, [Agent(0, w.vertex(0, 2), w.vertex(4, 2), Orientation.EAST),
                        Agent(1, w.vertex(2, 0), w.vertex(2, 4), Orientation.SOUTH)])
    cfg = PlannerConfig()
    res = solve(inst, cfg)
    t1, t2 = unconstrained_arrivals(inst, cfg)
    wait = sum(a.duration for p in res.plans for a in p.actions if a.kind.value == "wait")
    assert wait > 0
    assert relative_soc(res.plans, [t1, t2]) == pytest.approx((t1 + t2 + wait) / (t1 + t2))


def test_throughput():
    assert throughput([], 10.0) == 0.0
    assert throughput([1.0] * 262, 1000.0) == pytest.approx(0.262)
    log = [3.0, 7.5, 12.0]
    assert throughput(log, 10.0) == throughput(list(log), 10.0) == 0.2
    with pytest.raises(ValueError):
        throughput(log, 0)
