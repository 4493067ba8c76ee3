"""Level 1: prioritized planning (PP) and priority-based search (PBS)."""
from __future__ import annotations

import dataclasses
import random
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .domain import GridWorld, KinodynamicLimits, Orientation, Plan
from .occupancy import SafeIntervalTable, first_overlap, occupancy_intervals
from .sps import make_solver
from .ssipp import SSIPP, PlannerCutoff, SearchConfig


@dataclass(frozen=True)
class Agent:
    id: int
    start: int
    goal: int
    start_orientation: Orientation = Orientation.EAST

    @property
    def order_key(self) -> tuple:
        # label-free key so results do not depend on agent numbering
        return (self.start, self.goal, int(self.start_orientation))


@dataclass
class Instance:
    world: GridWorld
    agents: list[Agent]
    limits: KinodynamicLimits = field(default_factory=KinodynamicLimits)


@dataclass
class PlannerConfig:
    level1: str = "pbs"
    sps: str = "bas"
    partial_expansion: bool = True
    duplicate_detection: bool = True
    heuristic: str = "distance"
    max_chains: int = 4
    cutoff: float = 60.0
    bcs_epsilon: float = 1e-3
    bcs_pieces: int = 100
    lp_backend: str = "highs"
    seed: int = 0
    pp_restarts: int = 10
    random_start: bool = False
    max_segment: Optional[int] = None
    consecutive_moves: bool = False

    def search_config(self, deadline: Optional[float] = None) -> SearchConfig:
        return SearchConfig(self.partial_expansion, self.duplicate_detection, self.heuristic,
                            self.max_segment, self.consecutive_moves, self.max_chains, deadline)


@dataclass
class SolveResult:
    success: bool
    status: str  # solved | unsolved | cutoff
    plans: list[Plan]
    runtime: dict
    stats: dict = field(default_factory=dict)
    failed_agent: Optional[int] = None

    @property
    def soc(self) -> float:
        return sum(p.arrival_time for p in self.plans)

    @property
    def makespan(self) -> float:
        return max((p.arrival_time for p in self.plans), default=0.0)


Collision = tuple[int, int, int, tuple[float, float]]


def detect_first_collision(plans: list[Plan], keys: Optional[dict] = None,
                           occ: Optional[dict] = None) -> Optional[Collision]:
    """Earliest overlapping occupancy between any two plans as (i, j, vertex, interval)."""
    keys = keys or {p.agent: p.agent for p in plans}
    if occ is None:
        occ = {p.agent: occupancy_intervals(p) for p in plans}
    per_vertex = defaultdict(list)
    for a, o in occ.items():
        for v, ivs in o.items():
            for lo, hi in ivs:
                per_vertex[v].append((lo, hi, a))
    best = None
    for v, items in per_vertex.items():
        if len(items) < 2:
            continue
        items.sort(key=lambda x: (x[0], x[1], keys[x[2]]))
        for idx, (lo, hi, a) in enumerate(items):
            for lo2, hi2, b in items[idx + 1:]:
                if lo2 >= hi - 1e-9:
                    break
                if a == b:
                    continue
                ov = (max(lo, lo2), min(hi, hi2))
                if ov[0] >= ov[1] - 1e-9:
                    continue
                i, j = sorted((a, b), key=lambda x: keys[x])
                cand = (ov[0], keys[i], keys[j], v, i, j, ov)
                if best is None or cand[:4] < best[:4]:
                    best = cand
    if best is None:
        return None
    return best[4], best[5], best[3], best[6]


class LowLevel:
    """SSIPP calls with shared solver and runtime accounting."""

    def __init__(self, instance: Instance, config: PlannerConfig, deadline: Optional[float]):
        self.instance = instance
        self.config = config
        self.deadline = deadline
        lim = instance.limits
        self.solver = make_solver(config.sps, lim, config.bcs_epsilon, config.bcs_pieces,
                                  config.lp_backend)
        self.level2_time = 0.0
        self.level3_time = 0.0
        self.calls = 0
        self.level3_calls = 0

    def plan(self, agent: Agent, obstacles: list[Plan], occs: Optional[list] = None) -> Optional[Plan]:
        if occs is not None:
            table = SafeIntervalTable.from_occupancies(occs, self.instance.world)
        else:
            table = SafeIntervalTable.build(obstacles, self.instance.world)
        return self.plan_on(agent, table)

    def plan_on(self, agent: Agent, table: SafeIntervalTable) -> Optional[Plan]:
        inst = self.instance
        s = SSIPP(inst.world, inst.limits, self.solver, self.config.search_config(self.deadline))
        self.calls += 1
        try:
            return s.plan(agent.start, agent.start_orientation, agent.goal, table, agent.id)
        finally:
            self.level2_time += s.stats.search_time - s.stats.level3_time
            self.level3_time += s.stats.level3_time
            self.level3_calls += s.stats.level3_calls


def _runtime(total: float, low: LowLevel) -> dict:
    return {"total": total, "level1": max(0.0, total - low.level2_time - low.level3_time),
            "level2": low.level2_time, "level3": low.level3_time}


def pp_solve(instance: Instance, config: PlannerConfig) -> SolveResult:
    t0 = time.perf_counter()
    deadline = t0 + config.cutoff
    low = LowLevel(instance, config, deadline)
    rng = random.Random(config.seed)
    agents = list(instance.agents)
    failed = None
    status = "unsolved"
    tries = 0
    try:
        for attempt in range(max(1, config.pp_restarts)):
            order = list(agents)
            if attempt > 0 or config.random_start:
                rng.shuffle(order)
            tries += 1
            table = SafeIntervalTable(instance.world)
            plans = {}
            for a in order:
                if time.perf_counter() > deadline:
                    raise PlannerCutoff()
                p = low.plan_on(a, table)
                if p is None:
                    if failed is None:
                        failed = a.id
                    break
                plans[a.id] = p
                table.add_plan(p)
            else:
                total = time.perf_counter() - t0
                return SolveResult(True, "solved", [plans[a.id] for a in agents],
                                   _runtime(total, low), {"orders_tried": tries,
                                                          "level3_calls": low.level3_calls})
    except PlannerCutoff:
        status = "cutoff"
    total = time.perf_counter() - t0
    return SolveResult(False, status, [], _runtime(total, low),
                       {"orders_tried": tries, "level3_calls": low.level3_calls}, failed)


@dataclass
class PTNode:
    higher: dict  # agent -> set of agents with higher priority (direct edges)
    plans: dict
    cost: float = 0.0

    def child(self) -> "PTNode":
        return PTNode({a: set(s) for a, s in self.higher.items()}, dict(self.plans), self.cost)


def _ancestors(higher: dict, a: int) -> set:
    seen, stack = set(), list(higher.get(a, ()))
    while stack:
        x = stack.pop()
        if x not in seen:
            seen.add(x)
            stack.extend(higher.get(x, ()))
    return seen


def _descendants(higher: dict, a: int, agents) -> set:
    lower = defaultdict(set)
    for x in agents:
        for y in higher.get(x, ()):
            lower[y].add(x)
    seen, stack = set(), list(lower[a])
    while stack:
        x = stack.pop()
        if x not in seen:
            seen.add(x)
            stack.extend(lower[x])
    return seen


def pbs_solve(instance: Instance, config: PlannerConfig) -> SolveResult:
    t0 = time.perf_counter()
    deadline = t0 + config.cutoff
    low = LowLevel(instance, config, deadline)
    by_id = {a.id: a for a in instance.agents}
    keys = {a.id: a.order_key for a in instance.agents}
    ids = sorted(by_id, key=lambda x: keys[x])
    stats = {"pt_nodes": 0, "pt_expanded": 0}

    occ_cache: dict = {}

    def occ_of(p: Plan):
        hit = occ_cache.get(id(p))
        if hit is None or hit[0] is not p:
            hit = occ_cache[id(p)] = (p, occupancy_intervals(p))
        return hit[1]

    def clashes(a: Plan, b: Plan) -> bool:
        return first_overlap(occ_of(a), occ_of(b)) is not None

    def replan(node: PTNode, x: int) -> bool:
        group = {x} | _descendants(node.higher, x, ids)
        # topological order inside the group, ties by label-free key
        order = []
        indeg = {a: len(node.higher.get(a, set()) & group) for a in group}
        ready = sorted((a for a in group if indeg[a] == 0), key=lambda a: keys[a])
        lower = defaultdict(list)
        for a in group:
            for b in node.higher.get(a, ()):
                if b in group:
                    lower[b].append(a)
        while ready:
            a = ready.pop(0)
            order.append(a)
            for b in lower[a]:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
                    ready.sort(key=lambda c: keys[c])
        for a in order:
            anc = _ancestors(node.higher, a)
            obstacles = [node.plans[b] for b in sorted(anc, key=lambda c: keys[c])]
            if a != x and not any(clashes(node.plans[a], node.plans[b]) for b in anc):
                continue
            p = low.plan(by_id[a], obstacles, [occ_of(q) for q in obstacles])
            if p is None:
                return False
            node.plans[a] = p
        node.cost = sum(p.arrival_time for p in node.plans.values())
        return True

    try:
        root = PTNode({a: set() for a in ids}, {})
        for a in ids:
            if time.perf_counter() > deadline:
                raise PlannerCutoff()
            p = low.plan(by_id[a], [])
            if p is None:
                total = time.perf_counter() - t0
                return SolveResult(False, "unsolved", [], _runtime(total, low), stats, a)
            root.plans[a] = p
        root.cost = sum(p.arrival_time for p in root.plans.values())
        stack = [root]
        stats["pt_nodes"] = 1
        while stack:
            if time.perf_counter() > deadline:
                raise PlannerCutoff()
            node = stack.pop()
            stats["pt_expanded"] += 1
            col = detect_first_collision(list(node.plans.values()), keys,
                                         {a: occ_of(p) for a, p in node.plans.items()})
            if col is None:
                total = time.perf_counter() - t0
                stats["level3_calls"] = low.level3_calls
                return SolveResult(True, "solved", [node.plans[a.id] for a in instance.agents],
                                   _runtime(total, low), stats)
            i, j = col[0], col[1]
            children = []
            for rank, (hi, lo) in enumerate(((i, j), (j, i))):
                if lo in _ancestors(node.higher, hi) or lo == hi:
                    continue  # would create a cycle
                ch = node.child()
                ch.higher[lo].add(hi)
                if replan(ch, lo):
                    children.append((ch.cost, rank, ch))
                    stats["pt_nodes"] += 1
            children.sort(key=lambda c: (c[0], c[1]))
            for _, _, ch in reversed(children):
                stack.append(ch)
        status = "unsolved"
    except PlannerCutoff:
        status = "cutoff"
    total = time.perf_counter() - t0
    stats["level3_calls"] = low.level3_calls
    return SolveResult(False, status, [], _runtime(total, low), stats)


def solve(instance: Instance, config: PlannerConfig) -> SolveResult:
    if config.cutoff <= 0:
        return SolveResult(False, "cutoff", [], {"total": 0.0, "level1": 0.0, "level2": 0.0,
                                                 "level3": 0.0})
    if config.level1 == "pp":
        return pp_solve(instance, config)
    if config.level1 == "pbs":
        return pbs_solve(instance, config)
    raise ValueError(f"unknown level-1 planner {config.level1!r}")


def unconstrained_arrivals(instance: Instance, config: PlannerConfig) -> list[float]:
    """Each agent's arrival time when planned alone (relative-SoC denominator)."""
    low = LowLevel(instance, dataclasses.replace(config, cutoff=1e9), None)
    out = []
    for a in instance.agents:
        p = low.plan(a, [])
        out.append(p.arrival_time if p is not None else float("inf"))
    return out
