"""Plan validation and solution metrics, independent of the planner internals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .domain import EPS_T, ActionKind, GridWorld, KinodynamicLimits, Plan, rotation_time
from .occupancy import SafeIntervalTable, first_overlap, occupancy_intervals

_BAND = 1e-6  # same open-band shrink as the occupancy model


@dataclass
class Violation:
    kind: str  # collision | dynamics | continuity | tableViolation
    agents: tuple
    time: float
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "agents": list(self.agents), "time": self.time,
                "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    analytic_pairs: set = field(default_factory=set)
    sampled_pairs: set = field(default_factory=set)
    disk_pairs: set = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def methods_agree(self) -> bool:
        return self.analytic_pairs == self.sampled_pairs

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def check_continuity(plan: Plan, world: GridWorld, limits: KinodynamicLimits) -> list[Violation]:
    out = []
    ag = (plan.agent,)
    if not world.is_free(plan.start_vertex):
        out.append(Violation("continuity", ag, plan.start_time, "start vertex blocked"))
    v, o, t = plan.start_vertex, plan.start_orientation, plan.start_time
    for a in plan.actions:
        if a.vertex != v or a.orientation != o:
            out.append(Violation("continuity", ag, a.start,
                                 f"{a.kind.value} begins at {a.vertex}/{a.orientation.short}, "
                                 f"agent is at {v}/{o.short}"))
        if a.start < t - 1e-7:
            out.append(Violation("continuity", ag, a.start, "action starts before previous ends"))
        if a.kind is ActionKind.WAIT:
            if a.duration < 0:
                out.append(Violation("continuity", ag, a.start, "negative wait"))
        elif not a.duration > 0:
            out.append(Violation("continuity", ag, a.start, "non-positive action time"))
        if a.kind is ActionKind.ROTATE:
            if abs(a.duration - rotation_time(a.orientation, a.to_orientation, limits)) > 1e-9:
                out.append(Violation("continuity", ag, a.start, "rotation time mismatch"))
        if a.kind is ActionKind.MOVE:
            try:
                a.segment.check(world)
            except ValueError as e:
                out.append(Violation("continuity", ag, a.start, str(e)))
            if a.segment.orientation != o:
                out.append(Violation("continuity", ag, a.start, "move not along heading"))
            if abs(a.profile.length - a.segment.length) > 1e-6:
                out.append(Violation("continuity", ag, a.start, "profile length != segment length"))
            if abs(a.profile.duration - a.duration) > 1e-9:
                out.append(Violation("continuity", ag, a.start, "profile duration mismatch"))
        v, o = a.end_vertex, a.end_orientation
        t = max(t, a.end)
    return out


def check_dynamics(plan: Plan, limits: KinodynamicLimits, n: int = 1000,
                   tol: float = 1e-6) -> list[Violation]:
    out = []
    for a in plan.actions:
        if a.kind is not ActionKind.MOVE:
            continue
        prof = a.profile
        ts = np.linspace(0.0, prof.duration, n)
        spd = np.array([prof.evaluate(float(t))[1] for t in ts])
        pos = prof.positions_at(ts)
        problems = []
        if spd.min() < -tol or spd.max() > limits.v_max + tol:
            problems.append(f"speed range [{spd.min():.6g}, {spd.max():.6g}]")
        acc = np.asarray(prof.accelerations())
        if acc.size and (acc.min() < limits.a_min - tol or acc.max() > limits.a_max + tol):
            problems.append(f"acceleration range [{acc.min():.6g}, {acc.max():.6g}]")
        if abs(prof.speed(0.0)) > 1e-9 or abs(prof.speeds[0]) > 1e-9 or abs(prof.speeds[-1]) > 1e-9:
            problems.append("non-zero endpoint speed")
        if np.any(np.diff(pos) < -1e-9):
            problems.append("position decreases")
        for p in problems:
            out.append(Violation("dynamics", (plan.agent,), a.start, p))
    return out


def _sample_cells(plan: Plan, world: GridWorld, ts: np.ndarray):
    """Per sample: two occupied cells (or -1) and the disk centre."""
    cells = np.full((len(ts), 2), -1, dtype=np.int64)
    centre = np.full((len(ts), 2), np.nan)
    present = ts >= plan.start_time - EPS_T

    def put_stationary(mask, v):
        cells[mask, 0] = v
        cells[mask, 1] = -1
        x, y = world.coords(v)
        centre[mask] = (x, y)

    v = plan.start_vertex
    t = plan.start_time
    for a in plan.actions:
        put_stationary(present & (ts >= t) & (ts < a.start), v)
        mask = (ts >= a.start) & (ts < a.end)
        if a.kind is ActionKind.MOVE:
            seg = a.segment
            ell = a.profile.positions_at(ts[mask] - a.start)
            x0, y0 = world.coords(seg.start)
            dx, dy = seg.orientation.delta
            lo = np.ceil(ell - 1 + _BAND).astype(np.int64)  # smallest k with k > ell - 1
            hi = np.floor(ell + 1 - _BAND).astype(np.int64)  # largest k with k < ell + 1
            lo = np.clip(lo, 0, seg.length)
            hi = np.clip(hi, 0, seg.length)
            verts = np.asarray(seg.vertices)
            c = np.stack([verts[lo], np.where(hi != lo, verts[hi], -1)], axis=1)
            cells[mask] = c
            centre[mask] = np.stack([x0 + dx * ell, y0 + dy * ell], axis=1)
            v = seg.end
        else:
            put_stationary(mask, v)
        t = a.end
    if plan.holds_end:
        put_stationary(present & (ts >= t), v)
    return cells, centre


def validate(plans: list[Plan], world: GridWorld, limits: KinodynamicLimits,
             dt: float = 0.01, horizon: Optional[float] = None,
             table: Optional[SafeIntervalTable] = None) -> ValidationReport:
    """Continuity, dynamics and collision checks; collisions both analytically and sampled."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rep = ValidationReport()
    for p in plans:
        rep.violations += check_continuity(p, world, limits)
        rep.violations += check_dynamics(p, limits)
    occ = {}
    for p in plans:
        o = occupancy_intervals(p)
        if horizon is not None:
            o = {v: [(a, min(b, horizon)) for a, b in ivs if a < horizon - EPS_T]
                 for v, ivs in o.items()}
            o = {v: ivs for v, ivs in o.items() if ivs}
        occ[p.agent] = o
    if table is not None:
        for p in plans:
            for v, ivs in occ[p.agent].items():
                for lo, hi in ivs:
                    if not table.is_safe(v, lo, hi):
                        rep.violations.append(Violation("tableViolation", (p.agent,), lo,
                                                        f"vertex {v} occupied [{lo:.6g}, {hi:.6g})"))
    ids = [p.agent for p in plans]
    for i in range(len(plans)):
        for j in range(i + 1, len(plans)):
            hit = first_overlap(occ[ids[i]], occ[ids[j]])
            if hit is not None:
                rep.analytic_pairs.add((ids[i], ids[j]))
                v, (lo, hi) = hit
                rep.violations.append(Violation("collision", (ids[i], ids[j]), lo,
                                                f"vertex {v} shared during [{lo:.6g}, {hi:.6g})"))
    # dense sampling witness
    end = max([p.end_time for p in plans] + [0.0]) + 1.0
    if horizon is not None:
        end = min(end, horizon)
    ts = np.arange(0.0, end, dt)
    if len(plans) > 1 and len(ts):
        samples = [_sample_cells(p, world, ts) for p in plans]
        cells = np.concatenate([s[0] for s in samples], axis=1)  # (T, 2A)
        owner = np.repeat(np.arange(len(plans)), 2)
        srt = np.argsort(cells, axis=1)
        cs = np.take_along_axis(cells, srt, axis=1)
        os_ = owner[srt]
        dup = (cs[:, 1:] == cs[:, :-1]) & (cs[:, 1:] >= 0) & (os_[:, 1:] != os_[:, :-1])
        for ti, k in zip(*np.nonzero(dup)):
            a, b = sorted((ids[os_[ti, k]], ids[os_[ti, k + 1]]))
            if (a, b) not in rep.sampled_pairs:
                rep.sampled_pairs.add((a, b))
                if (a, b) not in rep.analytic_pairs:
                    rep.violations.append(Violation("collision", (a, b), float(ts[ti]),
                                                    f"sampled cell {cs[ti, k]} shared"))
        cen = np.stack([s[1] for s in samples], axis=1)  # (T, A, 2)
        diff = cen[:, :, None, :] - cen[:, None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        iu = np.triu_indices(len(plans), 1)
        close = dist[:, iu[0], iu[1]] < 1.0 - 1e-9
        for ti, k in zip(*np.nonzero(close)):
            a, b = ids[iu[0][k]], ids[iu[1][k]]
            if (a, b) not in rep.disk_pairs:
                rep.disk_pairs.add((a, b))
                if (a, b) not in rep.analytic_pairs:
                    rep.violations.append(Violation("collision", (a, b), float(ts[ti]),
                                                    "sampled disks overlap"))
    return rep


def sum_of_cost(plans: Iterable[Plan]) -> float:
    return float(sum(p.arrival_time for p in plans))


def makespan(plans: Iterable[Plan]) -> float:
    return float(max((p.arrival_time for p in plans), default=0.0))


def relative_soc(plans: list[Plan], solo_arrivals: list[float]) -> float:
    """SoC over the sum of each agent's collision-free solo arrival time."""
    den = float(sum(solo_arrivals))
    if den <= 0:
        return 1.0
    return sum_of_cost(plans) / den


def throughput(completions: Iterable[float], horizon: float) -> float:
    """Goals per second; `completions` are task completion times, counted when <= horizon."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return sum(1 for t in completions if t <= horizon + EPS_T) / horizon
