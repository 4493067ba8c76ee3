import dataclasses

import pytest

from conftest import solo
from mass.domain import GridWorld, Orientation, Plan, wait_action
from mass.executor import validate
from mass.mapf import (Agent, Instance, PlannerConfig, detect_first_collision, solve,
                       unconstrained_arrivals)
from mass.maps import empty_map, random_scenario

CROSS = GridWorld.from_rows(["@@.@@", "@@.@@", ".....", "@@.@@", "@@.@@"], name="cross")


def crossing(order=(0, 1)):
    w = CROSS
    ags = [Agent(0, w.vertex(0, 2), w.vertex(4, 2), Orientation.EAST),
           Agent(1, w.vertex(2, 0), w.vertex(2, 4), Orientation.SOUTH)]
    return Instance(w, [ags[i] for i in order])


def cfg(**kw):
    return PlannerConfig(**{"cutoff": 30.0, **kw})


def stay(agent, v, lo, hi):
    return Plan(agent, v, Orientation.EAST, [wait_action(lo, hi - lo, v, Orientation.EAST)],
                start_time=lo, holds_end=False)


def test_pp_single_agent_matches_ssipp():
    w = GridWorld.from_rows(["....", ".@@.", "...."])
    inst = Instance(w, [Agent(0, 0, w.vertex(3, 2))])
    res = solve(inst, cfg(level1="pp"))
    assert res.success
    assert res.plans[0].arrival_time == pytest.approx(solo(w, 0, w.vertex(3, 2)).arrival_time)


def test_pp_crossing_delays_second_agent():
    inst = crossing()
    res = solve(inst, cfg(level1="pp", pp_restarts=1))
    alone = unconstrained_arrivals(inst, cfg())
    assert res.success
    assert res.plans[0].arrival_time == pytest.approx(alone[0])
    assert res.plans[1].arrival_time > alone[1] + 1e-6
    assert validate(res.plans, inst.world, inst.limits).ok


def test_pp_head_on_corridor_fails_both_orders():
    w = GridWorld.from_rows(["......"])
    a, b = Agent(0, 0, 5), Agent(1, 5, 0, Orientation.WEST)
    for ags in ([a, b], [b, a]):
        res = solve(Instance(w, ags), cfg(level1="pp", pp_restarts=1))
        assert not res.success and res.status == "unsolved"
        assert res.failed_agent == ags[1].id
    assert not solve(Instance(w, [a, b]), cfg(level1="pbs")).success


def test_pbs_independent_plans_unchanged():
    w = empty_map(6, 6)
    inst = Instance(w, [Agent(0, 0, 5), Agent(1, w.vertex(0, 5), w.vertex(5, 5))])
    res = solve(inst, cfg())
    assert res.stats["pt_nodes"] == 1
    assert [p.arrival_time for p in res.plans] == pytest.approx(unconstrained_arrivals(inst, cfg()))


def test_pbs_crossing_takes_cheaper_ordering():
    pp = [solve(crossing(o), cfg(level1="pp", pp_restarts=1)).soc for o in ((0, 1), (1, 0))]
    res = solve(crossing(), cfg())
    assert res.success
    assert res.soc == pytest.approx(min(pp))


def test_pbs_independent_of_input_order():
    a = solve(crossing((0, 1)), cfg())
    b = solve(crossing((1, 0)), cfg())
    by_id = lambda r: sorted((p.agent, p.arrival_time) for p in r.plans)
    assert by_id(a) == by_id(b)


def test_pbs_tiny_cutoff_reports_cutoff():
    w = empty_map(16, 16)
    sc = random_scenario(w, 50, seed=3)
    inst = Instance(w, [Agent(i, w.vertex(*e.start), w.vertex(*e.goal)) for i, e in enumerate(sc)])
    res = solve(inst, cfg(cutoff=0.001))
    assert not res.success and res.status == "cutoff"
    assert solve(inst, cfg(cutoff=0)).status == "cutoff"


def test_unknown_planner():
    with pytest.raises(ValueError):
        solve(crossing(), cfg(level1="cbs"))


def test_detect_first_collision_cases():
    assert detect_first_collision([stay(0, 1, 0, 5), stay(1, 2, 0, 5)]) is None
    assert detect_first_collision([stay(0, 7, 0, 5), stay(1, 7, 3, 8)]) == (0, 1, 7, (3, 5))


def test_detect_swap_mid_edge(limits):
    w = GridWorld.empty(2, 1)
    p = solo(w, 0, 1)
    q = solo(w, 1, 0, Orientation.WEST)
    q.agent = 1
    i, j, v, iv = detect_first_collision([p, q])
    assert {i, j} == {0, 1} and v in (0, 1)
    assert iv[0] < 0.01


def test_pbs_root_cost_not_above_final():
    inst = crossing()
    root = sum(unconstrained_arrivals(inst, cfg()))
    assert solve(inst, cfg()).soc >= root - 1e-9
