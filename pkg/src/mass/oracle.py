"""Brute-force reference planner on a time grid, used to check MASS in tests.

States are (vertex, heading, safe interval) reached at rest at a grid time k*dt.  Moves
are rest-to-rest trapezoids whose peak speed is a multiple of ``dv`` and whose phases
all last a whole number of steps, so every move lands on a grid time.  Any plan found
here is also a candidate for MASS, so MASS should never arrive later.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

from .domain import (INF, GridWorld, KinodynamicLimits, MoveSegment, Orientation, Plan,
                     move_action, rotate_action, wait_action)
from .occupancy import POS_EPS, SafeIntervalTable
from .profiles import PiecewiseProfile

_TINY = 1e-9


def closed_form_move_time(length: float, limits: KinodynamicLimits) -> float:
    """Fastest rest-to-rest time over `length` under the speed and acceleration bounds."""
    if length <= 0:
        return 0.0
    a, d, vm = limits.a_max, -limits.a_min, limits.v_max
    ramp = vm * vm / (2 * a) + vm * vm / (2 * d)
    if length >= ramp:
        return vm / a + vm / d + (length - ramp) / vm
    vp = math.sqrt(2 * length * a * d / (a + d))
    return vp / a + vp / d


@dataclass(frozen=True)
class Trapezoid:
    peak: float
    ta: float
    tc: float
    td: float
    length: int
    steps: int

    @property
    def duration(self) -> float:
        return self.ta + self.tc + self.td

    def time_at(self, s: float, a: float, d: float) -> float:
        """First time the position reaches s (0 <= s <= length)."""
        da = self.peak * self.ta / 2
        dc = self.peak * self.tc
        if s <= da:
            return math.sqrt(2 * s / a)
        if s <= da + dc:
            return self.ta + (s - da) / self.peak
        rem = max(0.0, self.length - s)  # distance still to go while braking
        return self.duration - math.sqrt(2 * rem / d)

    def profile(self) -> PiecewiseProfile:
        t1 = self.ta
        t2 = self.ta + self.tc
        if self.tc > 0:
            return PiecewiseProfile([0.0, t1, t2, self.duration], [0.0, self.peak, self.peak, 0.0])
        return PiecewiseProfile([0.0, t1, self.duration], [0.0, self.peak, 0.0])


def trapezoids(length: int, limits: KinodynamicLimits, dt: float, dv: float) -> list[Trapezoid]:
    a, d = limits.a_max, -limits.a_min
    sa, sd = dv / a / dt, dv / d / dt
    if abs(sa - round(sa)) > 1e-9 or abs(sd - round(sd)) > 1e-9:
        raise ValueError("dv / accel must be a whole number of dt steps")
    sa, sd = round(sa), round(sd)
    out = []
    for j in range(1, int(limits.v_max / dv + 1e-9) + 1):
        vp = j * dv
        ramp = vp * vp / (2 * a) + vp * vp / (2 * d)
        cruise = length - ramp
        if cruise < -1e-9:
            break
        n = cruise / (vp * dt)
        if abs(n - round(n)) > 1e-7:
            continue
        n = round(n)
        out.append(Trapezoid(vp, j * sa * dt, n * dt, j * sd * dt, length, j * (sa + sd) + n))
    return out


class DiscretizedOracle:
    def __init__(self, world: GridWorld, limits: KinodynamicLimits = KinodynamicLimits(),
                 dt: float = 0.05, dv: float = 0.1, max_time: float = 200.0):
        self.world = world
        self.limits = limits
        self.dt = dt
        self.dv = dv
        self.max_steps = int(max_time / dt)
        self._moves: dict[int, list] = {}
        self.expanded = 0

    def _move_options(self, length: int):
        if length not in self._moves:
            opts = []
            a, d = self.limits.a_max, -self.limits.a_min
            for tr in trapezoids(length, self.limits, self.dt, self.dv):
                wins = []
                for k in range(length + 1):
                    lo = 0.0 if k == 0 else tr.time_at(k - 1 + POS_EPS, a, d)
                    hi = tr.duration if k == length else tr.time_at(k + 1 - POS_EPS, a, d)
                    wins.append((lo, hi))
                opts.append((tr, wins))
            self._moves[length] = opts
        return self._moves[length]

    def _ranges(self, table, v, lo_off, hi_off):
        """Departure steps d for which [d*dt+lo_off, d*dt+hi_off) sits in a safe interval of v."""
        out = []
        for s_lo, s_hi in table.safe_intervals(v):
            a = math.ceil((s_lo - lo_off) / self.dt - _TINY)
            b = INF if s_hi == INF else math.floor((s_hi - hi_off) / self.dt + _TINY)
            if b >= a:
                out.append((a, b))
        return out

    @staticmethod
    def _intersect(xs, ys):
        out = []
        i = j = 0
        while i < len(xs) and j < len(ys):
            lo = max(xs[i][0], ys[j][0])
            hi = min(xs[i][1], ys[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if xs[i][1] < ys[j][1]:
                i += 1
            else:
                j += 1
        return out

    def _verified(self, table, seg, wins, d):
        t0 = d * self.dt
        return all(table.is_safe(v, t0 + lo, t0 + hi) for v, (lo, hi) in zip(seg.vertices, wins))

    def plan(self, start: int, orientation: Orientation, goal: int, table: SafeIntervalTable,
             agent: int = 0, start_time: float = 0.0) -> Optional[Plan]:
        w, dt = self.world, self.dt
        k0 = round(start_time / dt)
        i0 = table.index_containing(start, k0 * dt)
        if i0 is None:
            return None
        rot_steps = {n: math.ceil(self.limits.rotate90_time * n / dt - _TINY) if n == 1 else
                     math.ceil(self.limits.rotate180_time / dt - _TINY) for n in (1, 2)}
        best: dict = {}
        parent: dict = {}
        s0 = (start, orientation, i0)
        best[s0] = k0
        heap = [(k0, 0, s0)]
        counter = 1
        self.expanded = 0
        while heap:
            k, _, s = heapq.heappop(heap)
            if best.get(s) != k:
                continue
            v, o, iv = s
            s_lo, s_hi = table.safe_intervals(v)[iv]
            if v == goal and s_hi == INF:
                return self._extract(s, parent, best, agent, start, orientation, k0)
            if k > self.max_steps:
                break
            self.expanded += 1
            succ = []
            # rotations happen as soon as possible; later rotations are dominated
            for o2 in Orientation:
                n = o.turns_to(o2)
                if n == 0:
                    continue
                k2 = k + rot_steps[n]
                if k2 * dt <= s_hi + _TINY and table.is_safe(v, k * dt, k2 * dt):
                    succ.append(((v, o2, iv), k2, ("rotate", k, o2)))
            dep_end = INF if s_hi == INF else math.floor(s_hi / dt + _TINY)
            u = v
            seg = [v]
            while True:
                u = w.step(u, o)
                if u is None:
                    break
                seg.append(u)
                L = len(seg) - 1
                ms = MoveSegment(tuple(seg), o)
                for tr, wins in self._move_options(L):
                    ok = [(k, math.floor((s_hi - wins[0][1]) / dt + _TINY) if s_hi < INF else INF)]
                    for vert, (lo, hi) in zip(seg[1:], wins[1:]):
                        ok = self._intersect(ok, self._ranges(table, vert, lo, hi))
                        if not ok:
                            break
                    for a, b in ok:
                        d = a
                        while d <= b and d <= dep_end and not self._verified(table, ms, wins, d):
                            d += 1  # float edge; normally the first step passes
                        if d > b or d > dep_end:
                            continue
                        k2 = d + tr.steps
                        j = table.index_containing(u, k2 * dt)
                        if j is None:
                            continue
                        succ.append(((u, o, j), k2, ("move", d, ms, tr)))
            for s2, k2, how in succ:
                if k2 < best.get(s2, INF):
                    best[s2] = k2
                    parent[s2] = (s, how)
                    heapq.heappush(heap, (k2, counter, s2))
                    counter += 1
        return None

    def _extract(self, s, parent, best, agent, start, orientation, k0) -> Plan:
        steps = []
        while s in parent:
            prev, how = parent[s]
            steps.append((prev, how))
            s = prev
        steps.reverse()
        dt = self.dt
        actions = []
        t = k0 * dt
        for (v, o, _), how in steps:
            if how[0] == "rotate":
                _, k, o2 = how
                act = rotate_action(k * dt, v, o, o2, self.limits)
                actions.append(act)
                t = act.end
            else:
                _, d, ms, tr = how
                if d * dt > t + 1e-12:
                    actions.append(wait_action(t, d * dt - t, v, o))
                actions.append(move_action(d * dt, ms, tr.profile()))
                t = d * dt + tr.duration
        return Plan(agent, start, orientation, actions, start_time=k0 * dt)


def discretized_plan(world: GridWorld, start: int, orientation: Orientation, goal: int,
                     table: SafeIntervalTable, limits: KinodynamicLimits = KinodynamicLimits(),
                     dt: float = 0.05, dv: float = 0.1, agent: int = 0) -> Optional[Plan]:
    return DiscretizedOracle(world, limits, dt, dv).plan(start, orientation, goal, table, agent)
