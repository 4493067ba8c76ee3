"""Level 3 speed profile solvers.

Both solvers receive a straight segment of ``length`` cells, the departure time ``t0``
and one safe interval per segment vertex (``windows[0]`` is the departure vertex,
``windows[-1]`` the target).  A profile is accepted when every vertex's occupancy window
fits inside its safe interval and the arrival lies strictly before the target's upper
bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import EPS_T, KinodynamicLimits
from .lp import lp_feasible
from .occupancy import move_vertex_windows
from .profiles import BezierProfile, PiecewiseProfile

Window = tuple[float, float]


@dataclass
class WindowSet:
    t0: float
    windows: list[Window]

    @property
    def length(self) -> int:
        return len(self.windows) - 1


def rest_to_rest(length: float, limits: KinodynamicLimits) -> PiecewiseProfile:
    """Fastest zero-to-zero speed profile over `length` cells (trapezoid or triangle)."""
    a, d, vm = limits.a_max, -limits.a_min, limits.v_max
    full = vm * vm / (2 * a) + vm * vm / (2 * d)
    if length >= full:
        ta, td = vm / a, vm / d
        tc = (length - full) / vm
        return PiecewiseProfile([0.0, ta, ta + tc, ta + tc + td], [0.0, vm, vm, 0.0])
    vp = math.sqrt(2 * length * a * d / (a + d))
    ta, td = vp / a, vp / d
    return PiecewiseProfile([0.0, ta, ta + td], [0.0, vp, 0.0])


def fits_windows(profile, ws: WindowSet, tol: float = 1e-7) -> bool:
    occ = move_vertex_windows(profile, ws.t0, ws.length)
    for (lo, hi), (lb, ub) in zip(occ, ws.windows):
        if lo < lb - tol or hi > ub + tol:
            return False
    return ws.t0 + profile.duration < ws.windows[-1][1] - EPS_T


class BinaryAccelerationSolver:
    """Wait at the departure vertex, then the fastest rest-to-rest profile.

    The only free parameter is the initial wait; every vertex's occupancy window
    shifts rigidly with it, so the feasible waits form an interval.
    """

    name = "bas"

    def __init__(self, limits: KinodynamicLimits):
        self.limits = limits
        self.calls = 0
        self._cache: dict[int, tuple[PiecewiseProfile, list[Window]]] = {}

    def _base(self, length: int):
        hit = self._cache.get(length)
        if hit is None:
            prof = rest_to_rest(length, self.limits)
            hit = (prof, move_vertex_windows(prof, 0.0, length))
            self._cache[length] = hit
        return hit

    def wait_range(self, length: int, ws: WindowSet) -> tuple[float, float]:
        prof, occ = self._base(length)
        lo, hi = 0.0, math.inf
        t0 = ws.t0
        for (e, x), (lb, ub) in zip(occ, ws.windows):
            if lb - t0 - e > lo:
                lo = lb - t0 - e
            if ub - t0 - x < hi:
                hi = ub - t0 - x
                if hi < lo:
                    break
        hi = min(hi, ws.windows[-1][1] - t0 - prof.duration - 2 * EPS_T)
        return lo, hi

    def __call__(self, length: int, ws: WindowSet) -> Optional[PiecewiseProfile]:
        self.calls += 1
        prof, _ = self._base(length)
        lo, hi = self.wait_range(length, ws)
        if lo > hi:
            return None
        if lo <= 0.0:
            return prof
        return PiecewiseProfile([0.0] + [t + lo for t in prof.times], [0.0] + prof.speeds)


class BezierCurveSolver:
    """LP feasibility over a quadratic Bezier spline, with bisection on the duration.

    The unknowns are the spline's speed control values at ``pieces + 1`` uniform knots
    (end values pinned to zero); positions and window constraints are linear in them.
    """

    name = "bcs"

    def __init__(self, limits: KinodynamicLimits, epsilon: float = 1e-3, pieces: int = 100,
                 backend: str = "highs", incumbent: bool = True):
        if pieces < 2:
            raise ValueError("need at least two spline pieces")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.limits = limits
        self.epsilon = epsilon
        self.pieces = pieces
        self.backend = backend
        self.incumbent = incumbent
        self.calls = 0
        self.lp_solves = 0
        self.last_bracket: Optional[tuple[float, float]] = None

    # -- LP construction ---------------------------------------------------
    def _position_rows(self, taus: np.ndarray, T: float) -> np.ndarray:
        """Rows r with position(tau) = r @ v over all N+1 knot speeds."""
        N = self.pieces
        h = T / N
        taus = np.clip(taus, 0.0, T)
        idx = np.minimum((taus / h).astype(int), N - 1)
        u = taus - idx * h
        rows = np.zeros((len(taus), N + 1))
        for r, (i, uu) in enumerate(zip(idx, u)):
            if i > 0:
                rows[r, :i] += h / 2
                rows[r, 1:i + 1] += h / 2
            rows[r, i] += uu - uu * uu / (2 * h)
            rows[r, i + 1] += uu * uu / (2 * h)
        return rows

    def _solve_at(self, T: float, length: int, ws: WindowSet) -> Optional[np.ndarray]:
        self.lp_solves += 1
        N = self.pieces
        lim = self.limits
        h = T / N
        taus, signs, rhs = [], [], []
        for k, (lb, ub) in enumerate(ws.windows):
            if k >= 1:
                tl = lb - ws.t0
                if tl >= T:
                    return None
                if tl > 0:
                    taus.append(tl); signs.append(1.0); rhs.append(k - 1.0)
            if k <= length - 1 and math.isfinite(ub):
                tu = ub - ws.t0
                if tu <= 0:
                    return None
                if tu < T:
                    taus.append(tu); signs.append(-1.0); rhs.append(-(k + 1.0))
        D = np.zeros((N, N + 1))
        D[np.arange(N), np.arange(N)] = -1.0
        D[np.arange(N), np.arange(1, N + 1)] = 1.0
        blocks = [D, -D]
        b = [np.full(N, lim.a_max * h), np.full(N, -lim.a_min * h)]
        if taus:
            W = self._position_rows(np.array(taus), T) * np.array(signs)[:, None]
            blocks.append(W)
            b.append(np.array(rhs))
        A_ub = np.vstack(blocks)[:, 1:N]  # drop the pinned end speeds
        b_ub = np.concatenate(b)
        A_eq = self._position_rows(np.array([T]), T)[:, 1:N]
        bounds = [(0.0, lim.v_max)] * (N - 1)
        x = lp_feasible(A_ub, b_ub, A_eq, [float(length)], bounds, backend=self.backend)
        if x is None:
            return None
        v = np.concatenate([[0.0], np.clip(x, 0.0, lim.v_max), [0.0]])
        return v

    def _profile(self, T: float, v: np.ndarray, length: int, wait: float = 0.0) -> BezierProfile:
        N = self.pieces
        h = T / N
        P = np.concatenate([[0.0], np.cumsum(h * (v[:-1] + v[1:]) / 2)])
        if P[-1] > 0:
            v = v * (length / P[-1])
            P = np.concatenate([[0.0], np.cumsum(h * (v[:-1] + v[1:]) / 2)])
        ctrl = np.empty(2 * N + 1)
        ctrl[0::2] = P
        ctrl[1::2] = P[:-1] + h * v[:-1] / 2
        ctrl[-1] = float(length)
        return BezierProfile(T + wait, ctrl, wait)

    def feasible(self, T: float, length: int, ws: WindowSet, wait: float = 0.0) -> Optional[BezierProfile]:
        """Profile of total duration T (leading `wait` included), or None."""
        shifted = WindowSet(ws.t0 + wait, ws.windows)
        v = self._solve_at(T - wait, length, shifted)
        if v is None:
            return None
        prof = self._profile(T - wait, v, length, wait)
        return prof if fits_windows(prof, ws) else None

    def bracket(self, length: int, ws: WindowSet, wait: float = 0.0) -> tuple[float, float]:
        lim = self.limits
        lo = wait + rest_to_rest(length, lim).duration
        last_entry = max([lb - ws.t0 for lb, _ in ws.windows[1:]] + [0.0])
        hi = max(last_entry, wait) + lo - wait - lim.v_max / lim.a_min + 1e-3
        ub_target = ws.windows[-1][1] - ws.t0
        if math.isfinite(ub_target):
            hi = min(hi, ub_target - 2 * EPS_T)
        return lo, hi

    @staticmethod
    def forced_wait(length: int, ws: WindowSet) -> float:
        """The agent cannot leave its first cell before the next one frees up."""
        if length < 1:
            return 0.0
        return max(0.0, ws.windows[1][0] - ws.t0)

    def __call__(self, length: int, ws: WindowSet) -> Optional[BezierProfile]:
        self.calls += 1
        wait = self.forced_wait(length, ws)
        lo, hi = self.bracket(length, ws, wait)
        self.last_bracket = (lo, hi)
        if hi < lo:
            return None
        # a wait-then-fastest profile, when it fits, bounds the search from above
        incumbent = self._bas(length, ws) if self.incumbent else None
        best = self.feasible(lo, length, ws, wait)
        if best is not None:
            # the forced wait ignores the entry tolerance, so BAS can still be a hair faster
            if incumbent is not None and incumbent.duration < best.duration:
                return incumbent
            return best
        if incumbent is not None and incumbent.duration < hi:
            hi = incumbent.duration
        probe = lo + self.epsilon
        if probe < hi:
            best = self.feasible(probe, length, ws, wait)
            if best is not None:
                self.last_bracket = (lo, probe)
                return best
            lo = probe
        best = incumbent if incumbent is not None else self.feasible(hi, length, ws, wait)
        if best is None:
            return None
        while hi - lo > self.epsilon:
            mid = 0.5 * (lo + hi)
            prof = self.feasible(mid, length, ws, wait)
            if prof is None:
                lo = mid
            else:
                hi, best = mid, prof
        self.last_bracket = (lo, hi)
        return best

    def _bas(self, length, ws):
        if not hasattr(self, "_bas_solver"):
            self._bas_solver = BinaryAccelerationSolver(self.limits)
        return self._bas_solver(length, ws)


def make_solver(name: str, limits: KinodynamicLimits, epsilon: float = 1e-3,
                pieces: int = 100, backend: str = "highs"):
    name = name.lower()
    if name == "bas":
        return BinaryAccelerationSolver(limits)
    if name == "bcs":
        return BezierCurveSolver(limits, epsilon, pieces, backend)
    raise ValueError(f"unknown speed profile solver {name!r}")


def free_windows(length: int, t0: float = 0.0) -> WindowSet:
    return WindowSet(t0, [(t0, math.inf)] + [(0.0, math.inf)] * length)
