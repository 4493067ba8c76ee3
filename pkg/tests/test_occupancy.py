import math

import pytest

from conftest import SQRT8
from mass.domain import INF, MoveSegment, Orientation, Plan, move_action, rotate_action, wait_action
from mass.occupancy import (SafeIntervalTable, complement, merge_intervals, occupancy_intervals,
                            first_overlap)
from mass.sps import rest_to_rest


def stay(agent, v, lo, hi, world_free=True):
    return Plan(agent, v, Orientation.EAST, [wait_action(lo, hi - lo, v, Orientation.EAST)],
                start_time=lo, holds_end=False)


def test_rotate_occupies_its_vertex(limits):
    r = rotate_action(2.0, 4, Orientation.EAST, Orientation.NORTH, limits)
    occ = occupancy_intervals(Plan(0, 4, Orientation.EAST, [r], start_time=2.0, holds_end=False))
    assert occ == {4: [(2.0, pytest.approx(3.5708, abs=1e-4))]}


def test_single_cell_move_holds_both_cells(limits):
    prof = rest_to_rest(1, limits)
    assert prof.duration == pytest.approx(SQRT8)
    a = move_action(0.0, MoveSegment((0, 1), Orientation.EAST), prof)
    occ = occupancy_intervals(Plan(0, 0, Orientation.EAST, [a]))
    # with only two cells the body overlaps both for the whole move; the 1e-6 position
    # tolerance near rest shifts the release by about sqrt(2e-6 / 0.5) = 2 ms
    assert occ[0] == [(0.0, pytest.approx(SQRT8, abs=3e-3))]
    lo, hi = occ[1][0]
    assert lo < 1e-2 and hi == INF


def test_long_move_releases_cells_in_order(limits):
    prof = rest_to_rest(4, limits)
    a = move_action(1.0, MoveSegment((0, 1, 2, 3, 4), Orientation.EAST), prof)
    occ = occupancy_intervals(Plan(0, 0, Orientation.EAST, [a], start_time=1.0, holds_end=False))
    ends = [occ[v][0][1] for v in range(4)]
    starts = [occ[v][0][0] for v in range(1, 5)]
    assert ends == sorted(ends) and starts == sorted(starts)
    assert occ[4][0][1] == pytest.approx(1.0 + prof.duration)


def test_empty_table_is_all_free(corridor):
    tab = SafeIntervalTable(corridor)
    assert all(tab.safe_intervals(v) == [(0.0, INF)] for v in corridor.free_vertices())


def test_table_complement_single_obstacle(corridor):
    tab = SafeIntervalTable.build([stay(1, 3, 3.0, 5.0)], corridor)
    assert tab.safe_intervals(3) == [(0.0, 3.0), (5.0, INF)]
    assert tab.index_containing(3, 4.0) is None
    assert tab.index_containing(3, 6.0) == 1


def test_table_union_of_obstacles(corridor):
    tab = SafeIntervalTable.build([stay(1, 3, 1.0, 2.0), stay(2, 3, 1.5, 4.0)], corridor)
    assert tab.safe_intervals(3) == [(0.0, 1.0), (4.0, INF)]


def test_merge_and_complement():
    assert merge_intervals([(3, 4), (1, 2), (1.5, 2.5)]) == [(1, 2.5), (3, 4)]
    assert complement([(1, 2), (3, 4)], 0, 5) == [(0, 1), (2, 3), (4, 5)]
    assert complement([], 0, INF) == [(0, INF)]


def test_first_overlap_stationary():
    a, b = stay(0, 7, 0.0, 5.0), stay(1, 7, 3.0, 8.0)
    v, iv = first_overlap(occupancy_intervals(a), occupancy_intervals(b))
    assert v == 7 and iv == (3.0, 5.0)


def test_swap_detected_at_endpoint(limits):
    prof = rest_to_rest(1, limits)
    a = Plan(0, 0, Orientation.EAST, [move_action(0.0, MoveSegment((0, 1), Orientation.EAST), prof)])
    b = Plan(1, 1, Orientation.WEST, [move_action(0.0, MoveSegment((1, 0), Orientation.WEST), prof)])
    hit = first_overlap(occupancy_intervals(a), occupancy_intervals(b))
    assert hit is not None and hit[0] in (0, 1) and hit[1][0] < 0.01


def test_table_from_cached_occupancy_matches_build(corridor, limits):
    prof = rest_to_rest(3, limits)
    plans = [Plan(0, 0, Orientation.EAST, [move_action(0.5, MoveSegment((0, 1, 2, 3), Orientation.EAST), prof)]),
             stay(1, 2, 0.0, 4.0), stay(2, 5, 1.0, 2.5)]
    a = SafeIntervalTable.build(plans, corridor)
    b = SafeIntervalTable.from_occupancies([occupancy_intervals(p) for p in plans], corridor)
    for v in range(corridor.num_vertices):
        assert a.safe_intervals(v) == b.safe_intervals(v)
