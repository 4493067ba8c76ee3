import math

import numpy as np
import pytest

from conftest import SQRT8
from mass.lp import LPDimensionError, lp_feasible
from mass.occupancy import move_vertex_windows
from mass.oracle import closed_form_move_time
from mass.profiles import BezierProfile, PiecewiseProfile, profile_from_dict
from mass.sps import (BezierCurveSolver, BinaryAccelerationSolver, WindowSet, fits_windows,
                      free_windows, make_solver, rest_to_rest)

INF = math.inf

# leave the first cell before 6 s, but the last one is only free from 8 s: the robot
# has to stop halfway, which a wait-then-full-speed profile cannot do
MID_STOP = WindowSet(0.0, [(0.0, 6.0), (0.0, INF), (8.0, INF)])


def test_closed_form_examples(limits):
    assert closed_form_move_time(1, limits) == pytest.approx(2.82843, abs=1e-5)
    assert closed_form_move_time(10, limits) == pytest.approx(9.0)
    assert closed_form_move_time(8, limits) == pytest.approx(8.0)


def test_bas_unconstrained_triangle(limits):
    p = BinaryAccelerationSolver(limits)(1, free_windows(1))
    assert p.duration == pytest.approx(SQRT8)
    assert max(p.speeds) == pytest.approx(math.sqrt(0.5))


def test_bas_unconstrained_trapezoid(limits):
    p = BinaryAccelerationSolver(limits)(10, free_windows(10))
    assert p.times == pytest.approx([0.0, 4.0, 5.0, 9.0])


def test_bas_waits_for_blocked_cell(limits):
    ws = WindowSet(0.0, [(0.0, INF), (3.0, INF)])
    p = BinaryAccelerationSolver(limits)(1, ws)
    assert p.leading_wait == pytest.approx(3.0, abs=1e-2)
    assert fits_windows(p, ws)


def test_bas_fails_on_mid_segment_stop(limits):
    assert BinaryAccelerationSolver(limits)(2, MID_STOP) is None


def test_bcs_succeeds_on_mid_segment_stop(limits):
    p = BezierCurveSolver(limits)(2, MID_STOP)
    assert p is not None and fits_windows(p, MID_STOP)
    assert p.check_limits(limits) == []
    _, _, v = p.sample(1000)
    assert v[1:-1].min() < 1e-6  # it really stops somewhere inside the move


def test_bcs_unconstrained_not_worse_than_bas(limits):
    p = BezierCurveSolver(limits)(1, free_windows(1))
    assert p.duration <= SQRT8 + 1e-3


def test_bcs_degenerate_window_fails(limits):
    ws = WindowSet(0.0, [(0.0, INF), (0.0, 1.0)])  # must clear cell 1 before it can get there
    assert BezierCurveSolver(limits)(1, ws) is None
    assert BinaryAccelerationSolver(limits)(1, ws) is None


def test_bcs_lp_feasible_near_bas_time(limits):
    assert BezierCurveSolver(limits).feasible(2.9, 1, free_windows(1)) is not None


def test_bcs_argument_checks(limits):
    with pytest.raises(ValueError):
        BezierCurveSolver(limits, pieces=1)
    with pytest.raises(ValueError):
        BezierCurveSolver(limits, epsilon=0)
    with pytest.raises(ValueError):
        make_solver("nope", limits)


def test_lp_small_systems():
    x = lp_feasible(A_ub=[[1.0]], b_ub=[1.0], bounds=[(0.0, INF)])
    assert x is not None and 0 <= x[0] <= 1
    assert lp_feasible(A_ub=[[1.0]], b_ub=[1.0], bounds=[(2.0, INF)]) is None
    assert lp_feasible(A_ub=[[1.0]], b_ub=[1.0], bounds=[(2.0, INF)], backend="highs") is None
    with pytest.raises(LPDimensionError):
        lp_feasible(A_ub=[[1.0, 1.0]], b_ub=[1.0], bounds=[(0, 1)])


def test_triangle_evaluate(limits):
    p = rest_to_rest(1, limits)
    pos, v = p.evaluate(p.duration / 2)
    assert pos == pytest.approx(0.5) and v == pytest.approx(math.sqrt(0.5))
    assert p.evaluate(0.0) == (0.0, 0.0)
    assert p.evaluate(p.duration) == (pytest.approx(1.0), 0.0)
    with pytest.raises(ValueError):
        p.evaluate(p.duration + 1)


def test_positions_vectorised_matches_scalar(limits):
    p = BezierCurveSolver(limits)(2, MID_STOP)
    ts = np.linspace(-1, p.duration + 1, 301)
    ref = [p.position(float(t)) for t in ts]
    assert np.allclose(p.positions_at(ts), ref, atol=1e-12)


def test_profile_dict_roundtrip(limits):
    for p in (rest_to_rest(3, limits), BezierCurveSolver(limits)(2, MID_STOP)):
        q = profile_from_dict(p.to_dict())
        assert type(q) is type(p)
        assert q.duration == pytest.approx(p.duration)
        assert q.position(1.7) == pytest.approx(p.position(1.7))


def test_leading_wait_split(limits):
    p = BinaryAccelerationSolver(limits)(1, WindowSet(0.0, [(0.0, INF), (3.0, INF)]))
    q = p.without_leading_wait()
    assert q.duration == pytest.approx(p.duration - p.leading_wait)
    assert q.leading_wait == 0.0


def test_piecewise_rejects_bad_knots():
    with pytest.raises(ValueError):
        PiecewiseProfile([1.0, 2.0], [0, 0])
    with pytest.raises(ValueError):
        PiecewiseProfile([0.0, 2.0, 1.0], [0, 1, 0])
    with pytest.raises(ValueError):
        PiecewiseProfile([0.0, 1.0], [0, -1])


def test_occupancy_windows_follow_profile(limits):
    p = rest_to_rest(3, limits)
    occ = move_vertex_windows(p, 0.0, 3)
    assert occ[0][0] == 0.0 and occ[-1][1] == pytest.approx(p.duration)
    # cell k is entered once the body leaves k-1's far edge, so entries increase
    assert [o[0] for o in occ] == sorted(o[0] for o in occ)
