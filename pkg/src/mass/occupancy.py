"""Vertex occupancy of committed plans and the safe interval table built from them.

An agent (a disk of one cell diameter) occupies vertex k of a move while its centre is
strictly less than one cell away, i.e. ``k - 1 < l(t) < k + 1``.  Touching is not a
collision.  ``POS_EPS`` shrinks that open band slightly so LP round-off never reads as
overlap.
"""
from __future__ import annotations

import bisect
import math
from collections import defaultdict
from typing import Iterable, Optional

from .domain import EPS_T, INF, ActionKind, GridWorld, Plan

POS_EPS = 1e-6

Interval = tuple[float, float]


def merge_intervals(ivs: Iterable[Interval], tol: float = EPS_T) -> list[Interval]:
    out: list[list[float]] = []
    for lb, ub in sorted(ivs):
        if ub - lb <= 0:
            continue
        if out and lb <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], ub)
        else:
            out.append([lb, ub])
    return [(a, b) for a, b in out]


def complement(ivs: list[Interval], lo: float = 0.0, hi: float = INF) -> list[Interval]:
    """Gaps of a merged, sorted interval list inside [lo, hi)."""
    out = []
    cur = lo
    for lb, ub in ivs:
        if ub <= cur:
            continue
        if lb > cur + EPS_T:
            out.append((cur, min(lb, hi)))
        cur = max(cur, ub)
        if cur >= hi:
            break
    if cur < hi - EPS_T:
        out.append((cur, hi))
    return [iv for iv in out if iv[1] - iv[0] > EPS_T]


def move_vertex_windows(profile, start: float, length: int) -> list[Interval]:
    """Occupancy window of each segment vertex (index 0..length) during one move."""
    out = []
    T = profile.duration
    for k in range(length + 1):
        enter = 0.0 if k == 0 else profile.last_time_at_most(k - 1 + POS_EPS)
        leave = T if k == length else profile.first_time_at_least(k + 1 - POS_EPS)
        out.append((start + enter, start + leave))
    return out


def occupancy_intervals(plan: Plan, world: Optional[GridWorld] = None,
                        buffer: float = 0.0) -> dict[int, list[Interval]]:
    """Per-vertex occupied time intervals of one plan (merged)."""
    raw: dict[int, list[Interval]] = defaultdict(list)
    v = plan.start_vertex
    t = plan.start_time
    for a in plan.actions:
        if a.start > t + EPS_T:
            raw[v].append((t, a.start))  # implicit stationary wait
        if a.kind is ActionKind.MOVE:
            seg = a.segment
            prof = a.profile
            pos = prof.positions
            if any(b < x - 1e-9 for x, b in zip(pos, pos[1:])):
                raise ValueError("profile not monotone non-decreasing")
            for vert, (lo, hi) in zip(seg.vertices, move_vertex_windows(prof, a.start, seg.length)):
                if hi > lo:
                    raw[vert].append((lo, hi))
            v = seg.end
        else:
            raw[v].append((a.start, a.end))
        t = a.end
    if plan.holds_end and math.isfinite(t):
        raw[v].append((t, INF))
    if not plan.actions and not plan.holds_end:
        raw[v].append((plan.start_time, plan.start_time))
    out = {}
    for vert, ivs in raw.items():
        if buffer > 0:
            ivs = [(a - buffer, b + buffer) for a, b in ivs]
        merged = merge_intervals(ivs)
        if merged:
            out[vert] = merged
    return out


def overlap(a: Interval, b: Interval) -> Optional[Interval]:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo < hi - EPS_T else None


def first_overlap(occ_a: dict[int, list[Interval]],
                  occ_b: dict[int, list[Interval]]) -> Optional[tuple[int, Interval]]:
    """Earliest (vertex, overlap interval) shared by two occupancy maps, if any."""
    best = None
    small, big = (occ_a, occ_b) if len(occ_a) <= len(occ_b) else (occ_b, occ_a)
    for v, ivs in small.items():
        other = big.get(v)
        if not other:
            continue
        for ia in ivs:
            for ib in other:
                ov = overlap(ia, ib)
                if ov and (best is None or (ov[0], v) < (best[1][0], best[0])):
                    best = (v, ov)
    return best


def plans_collide(a: Plan, b: Plan) -> bool:
    return first_overlap(occupancy_intervals(a), occupancy_intervals(b)) is not None


class SafeIntervalTable:
    """Per-vertex safe intervals: the complement of all obstacle occupancy in [0, horizon)."""

    def __init__(self, world: GridWorld, horizon: float = INF, start: float = 0.0):
        self.world = world
        self.horizon = horizon
        self.start = start
        self._occ: dict[int, list[Interval]] = {}
        self._safe: dict[int, list[Interval]] = {}
        self._lbs: dict[int, list[float]] = {}

    @classmethod
    def build(cls, obstacle_plans: Iterable[Plan], world: GridWorld, horizon: float = INF,
              buffer: float = 0.0, start: float = 0.0) -> "SafeIntervalTable":
        tab = cls(world, horizon, start)
        for p in obstacle_plans:
            tab.add_plan(p, buffer)
        return tab

    @classmethod
    def from_occupancies(cls, occs: Iterable[dict], world: GridWorld, horizon: float = INF,
                         start: float = 0.0) -> "SafeIntervalTable":
        """Same as build() from precomputed occupancy dicts; merges each vertex once."""
        raw: dict[int, list[Interval]] = defaultdict(list)
        for occ in occs:
            for v, ivs in occ.items():
                raw[v].extend(ivs)
        tab = cls(world, horizon, start)
        tab._occ = {v: merge_intervals(ivs) for v, ivs in raw.items()}
        return tab

    def copy(self) -> "SafeIntervalTable":
        tab = SafeIntervalTable(self.world, self.horizon, self.start)
        tab._occ = {v: list(iv) for v, iv in self._occ.items()}
        return tab

    def add_occupancy(self, occ: dict[int, list[Interval]]) -> None:
        for v, ivs in occ.items():
            self._occ[v] = merge_intervals(self._occ.get(v, []) + list(ivs))
            self._safe.pop(v, None)
            self._lbs.pop(v, None)

    def add_plan(self, plan: Plan, buffer: float = 0.0) -> None:
        self.add_occupancy(occupancy_intervals(plan, self.world, buffer))

    def occupied(self, v: int) -> list[Interval]:
        return self._occ.get(v, [])

    def safe_intervals(self, v: int) -> list[Interval]:
        s = self._safe.get(v)
        if s is None:
            s = complement(self._occ.get(v, []), self.start, self.horizon)
            self._safe[v] = s
            self._lbs[v] = [iv[0] for iv in s]
        return s

    def index_containing(self, v: int, t: float) -> Optional[int]:
        """Index of the safe interval at v containing time t, or None."""
        s = self.safe_intervals(v)
        i = bisect.bisect_right(self._lbs[v], t + EPS_T) - 1
        if i >= 0 and s[i][0] - EPS_T <= t < s[i][1]:
            return i
        return None

    def is_safe(self, v: int, lo: float, hi: float) -> bool:
        """True when [lo, hi) lies inside one safe interval of v."""
        i = self.index_containing(v, lo)
        return i is not None and hi <= self.safe_intervals(v)[i][1] + EPS_T
