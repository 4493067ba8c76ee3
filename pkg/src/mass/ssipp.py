"""Level 2: stationary-state safe interval search (full and partial expansion)."""
from __future__ import annotations

import heapq
import itertools
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain import (EPS_T, INF, ActionKind, GridWorld, KinodynamicLimits, MoveSegment,
                     Orientation, Plan, TimedAction, move_action, rotate_action,
                     rotation_time, wait_action)
from .occupancy import SafeIntervalTable
from .sps import WindowSet, rest_to_rest


class PlannerCutoff(Exception):
    """Raised when a search exceeds its wall-clock deadline."""


@dataclass
class SearchConfig:
    partial_expansion: bool = True
    duplicate_detection: bool = True
    heuristic: str = "distance"  # or "kinematic"
    max_segment: Optional[int] = None
    consecutive_moves: bool = False  # stop-and-go baseline only
    max_chains: int = 4  # interval chains kept per (vertex, safe interval) in the ray search
    deadline: Optional[float] = None  # time.perf_counter() value


@dataclass
class SearchStats:
    pops: int = 0
    generated: int = 0
    level3_calls: int = 0
    level3_time: float = 0.0
    search_time: float = 0.0
    popped_f: list = field(default_factory=list)


@dataclass(eq=False, slots=True)
class Node:
    vertex: int
    orientation: Orientation
    prev: Optional[ActionKind]
    interval: int
    lb: float
    ub: float
    h: float
    parent: Optional["Node"] = None
    action: Optional[TimedAction] = None
    goal_index: int = 0
    reach: Optional[list] = None  # reachable intervals left to expand (partial expansion)
    fkey: Optional[float] = None  # set once partially expanded: best remaining child
    expanded: bool = False
    pruned: bool = False

    @property
    def g(self) -> float:
        return self.lb

    @property
    def f(self) -> float:
        return self.lb + self.h


@dataclass(eq=False, slots=True)
class Reach:
    """A reachable stationary interval found by the ray search."""

    vertex: int
    interval: int
    lb: float
    ub: float
    parent: Optional["Reach"]
    depth: int
    p: float = 0.0
    window: tuple = (0.0, INF)  # the safe interval itself
    path: Optional[tuple] = None  # (vertices, windows) for depths 1..depth, shared along a chain


_HCACHE: dict = {}


def grid_distances(world: GridWorld, goal: int) -> np.ndarray:
    """Hop distance from every vertex to `goal` over free 4-neighbours (inf if cut off)."""
    key = (id(world), world.width, world.height, goal)
    hit = _HCACHE.get(key)
    if hit is not None and hit[0] is world:
        return hit[1]
    dist = np.full(world.num_vertices, np.inf)
    if world.is_free(goal):
        dist[goal] = 0
        q = deque([goal])
        while q:
            v = q.popleft()
            dv = dist[v] + 1
            for u in world.neighbors(v):
                if dist[u] > dv:
                    dist[u] = dv
                    q.append(u)
    if len(_HCACHE) > 4096:
        _HCACHE.clear()
    _HCACHE[key] = (world, dist)
    return dist


def heuristic(world: GridWorld, goal: int, limits: KinodynamicLimits,
              kind: str = "distance") -> np.ndarray:
    """Admissible time-to-goal in seconds, indexed [vertex, orientation]."""
    if kind == "relaxed":
        return relaxed_heuristic(world, goal, limits)
    d = grid_distances(world, goal)
    if kind == "distance":
        out = d / limits.v_max
    elif kind == "kinematic":
        # fastest rest-to-rest time is subadditive in distance, so this stays consistent
        out = np.full_like(d, np.inf)
        for v in np.flatnonzero(np.isfinite(d)):
            out[v] = 0.0 if d[v] == 0 else _rest_time(int(d[v]), limits)
    else:
        raise ValueError(f"unknown heuristic {kind!r}")
    return np.repeat(out[:, None], 4, axis=1)


_RELAXED: dict = {}


def _relaxed_graph(world: GridWorld, limits: KinodynamicLimits):
    """Reversed graph over (vertex, heading, stopped|moving) with lower-bound costs.

    A straight run of L cells costs at least s0 + L / v_max with s0 = rest(1) - 1 / v_max,
    because rest(L) - L / v_max never decreases in L.  Turning costs its rotation time.
    """
    from scipy.sparse import csr_matrix

    key = (id(world), limits)
    hit = _RELAXED.get(key)
    if hit is not None and hit[0] is world:
        return hit[1]
    step = world.cell_length / limits.v_max
    s0 = _rest_time(1, limits) - step
    blocked = np.asarray(world.blocked, dtype=bool)
    free = np.flatnonzero(~blocked)
    xs, ys = free % world.width, free // world.width
    idx = lambda v, o, m: (v * 4 + o) * 2 + m
    rows, cols, w = [], [], []

    def edge(a, b, c):
        rows.append(b)  # reversed: cost-to-go from a is found by searching from the goal
        cols.append(a)
        w.append(np.full(len(a), c, dtype=float))

    for o in Orientation:
        for o2 in Orientation:
            if o2 != o:
                edge(idx(free, int(o), 0), idx(free, int(o2), 0), rotation_time(o, o2, limits))
        edge(idx(free, int(o), 1), idx(free, int(o), 0), 1e-12)  # stopping is free
        dx, dy = o.delta
        nx, ny = xs + dx, ys + dy
        ok = (nx >= 0) & (nx < world.width) & (ny >= 0) & (ny < world.height)
        u = np.where(ok, ny * world.width + nx, 0)
        ok &= ~blocked[u]
        v, u = free[ok], u[ok]
        edge(idx(v, int(o), 0), idx(u, int(o), 1), s0 + step)
        edge(idx(v, int(o), 1), idx(u, int(o), 1), step)
    rows, cols, w = np.concatenate(rows), np.concatenate(cols), np.concatenate(w)
    n = world.num_vertices * 8
    g = csr_matrix((w, (rows, cols)), shape=(n, n))
    if len(_RELAXED) > 16:
        _RELAXED.clear()
    _RELAXED[key] = (world, g)
    return g


def relaxed_heuristic(world: GridWorld, goal: int, limits: KinodynamicLimits) -> np.ndarray:
    from scipy.sparse.csgraph import dijkstra

    key = ("relaxed", id(world), goal, limits)
    hit = _HCACHE.get(key)
    if hit is not None and hit[0] is world:
        return hit[1]
    g = _relaxed_graph(world, limits)
    src = [(goal * 4 + o) * 2 for o in range(4)]
    dist = dijkstra(g, directed=True, indices=src, min_only=True)
    out = dist.reshape(world.num_vertices, 4, 2)[:, :, 0].copy()
    out[out < 1e-9] = 0.0
    if len(_HCACHE) > 4096:
        _HCACHE.clear()
    _HCACHE[key] = (world, out)
    return out


_RT: dict = {}


def _rest_time(n: int, limits: KinodynamicLimits) -> float:
    key = (n, limits)
    if key not in _RT:
        _RT[key] = rest_to_rest(n, limits).duration
    return _RT[key]


class StationarySearch:
    """Shared machinery: rotate expansion, ray search over intervals, Level 3 calls."""

    def __init__(self, world: GridWorld, limits: KinodynamicLimits, solver,
                 config: Optional[SearchConfig] = None):
        self.world = world
        self.limits = limits
        self.solver = solver
        self.config = config or SearchConfig()
        self.stats = SearchStats()
        self.table: Optional[SafeIntervalTable] = None
        self._open: list = []
        self._tick = itertools.count()
        self._fastest: dict[int, float] = {}  # rest-to-rest duration by segment length
        self._seen: dict = {}

    # -- OPEN / duplicates --------------------------------------------------
    def f_of(self, lb: float, h: float) -> float:
        return lb + h

    def key(self, n: Node) -> tuple:
        f = n.fkey if n.fkey is not None else self.f_of(n.lb, n.h)
        return (f, -n.g)

    def push(self, n: Node, reinsert: bool = False) -> None:
        if not reinsert:
            self.stats.generated += 1
            if self.config.duplicate_detection:
                k = (n.vertex, n.orientation, n.ub, n.goal_index)
                old = self._seen.get(k)
                if old is not None and old.lb <= n.lb:
                    return
                if old is not None:
                    old.pruned = True
                self._seen[k] = n
        heapq.heappush(self._open, (self.key(n), next(self._tick), n))

    def pop(self) -> Optional[Node]:
        while self._open:
            _, _, n = heapq.heappop(self._open)
            if not n.pruned:
                return n
        return None

    def check_deadline(self) -> None:
        dl = self.config.deadline
        if dl is not None and self.stats.pops % 32 == 1 and time.perf_counter() > dl:
            raise PlannerCutoff()

    # -- expansions -----------------------------------------------------------
    def h(self, vertex: int, goal_index: int, orientation: int) -> float:
        raise NotImplementedError

    def h_many(self, vertices: list[int], goal_index: int, orientation: int) -> list[float]:
        cache: dict = {}
        out = []
        for v in vertices:
            hv = cache.get(v)
            if hv is None:
                hv = cache[v] = self.h(v, goal_index, orientation)
            out.append(hv)
        return out

    def rotate_children(self, n: Node) -> list[Node]:
        out = []
        for o in Orientation:
            if o == n.orientation:
                continue
            lb = n.lb + rotation_time(n.orientation, o, self.limits)
            if lb >= n.ub:
                continue
            act = rotate_action(n.lb, n.vertex, n.orientation, o, self.limits)
            out.append(Node(n.vertex, o, ActionKind.ROTATE, n.interval, lb, n.ub,
                            self.h(n.vertex, n.goal_index, o), n, act, n.goal_index))
        return out

    def move_intervals(self, n: Node) -> list[Reach]:
        """Breadth-first search over safe intervals along the node's heading."""
        safe_of = self.table.safe_intervals
        cached = self.table._safe
        tmin = 1.0 / self.limits.v_max
        max_chains = self.config.max_chains
        ray = self.world.ray(n.vertex, n.orientation)
        if self.config.max_segment is not None:
            ray = ray[:self.config.max_segment]
        frontier = [Reach(n.vertex, n.interval, n.lb, n.ub, None, 0)]
        out: list[Reach] = []
        for depth, u in enumerate(ray, 1):
            safe = cached.get(u) or safe_of(u)
            if len(safe) == 1 and len(frontier) == 1:
                # one chain through a cell with one safe interval: the common case
                it = frontier[0]
                slb, sub = safe[0]
                if slb >= it.ub:
                    break
                rlb = it.lb + tmin
                if slb > rlb:
                    rlb = slb
                if rlb >= sub - EPS_T:
                    break
                r = Reach(u, 0, rlb, sub, it, depth, 0.0, safe[0])
                out.append(r)
                frontier = [r]
                continue
            nxt = []
            if len(safe) == 1:
                slb, sub = safe[0]
                for it in frontier:
                    if slb >= it.ub:
                        continue
                    rlb = it.lb + tmin
                    if slb > rlb:
                        rlb = slb
                    if rlb < sub - EPS_T:
                        nxt.append(Reach(u, 0, rlb, sub, it, depth, 0.0, safe[0]))
                        if len(nxt) >= max_chains:
                            break
            else:
                counts: dict[int, int] = {}
                for it in frontier:
                    cand = it.lb + tmin
                    for j, (slb, sub) in enumerate(safe):
                        if slb >= it.ub:
                            break
                        rlb = slb if slb > cand else cand
                        if rlb >= sub - EPS_T:
                            continue
                        c = counts.get(j, 0)
                        if c >= max_chains:
                            continue
                        counts[j] = c + 1
                        nxt.append(Reach(u, j, rlb, sub, it, depth, 0.0, safe[j]))
                nxt.sort(key=lambda r: (r.lb, r.interval))
            if not nxt:
                break
            out.extend(nxt)
            frontier = nxt
        if out:
            hs = self.h_many([r.vertex for r in out], n.goal_index, n.orientation)
            if type(self).f_of is StationarySearch.f_of:
                for r, hv in zip(out, hs):
                    r.p = r.lb + hv
            else:
                f_of = self.f_of
                for r, hv in zip(out, hs):
                    r.p = f_of(r.lb, hv)
        return out

    def windows_for(self, n: Node, target: Reach) -> tuple[MoveSegment, WindowSet]:
        # walk up to the nearest ancestor with a cached prefix, then extend it; a chain
        # that keeps growing appends to the same lists, so long rays stay linear
        todo = []
        r = target
        while r.depth > 0 and r.path is None:
            todo.append(r)
            r = r.parent
        if r.depth > 0:
            verts, wins = r.path
            if len(verts) != r.depth:
                verts, wins = verts[:r.depth], wins[:r.depth]
        else:
            verts, wins = [], []
        for x in reversed(todo):
            verts.append(x.vertex)
            wins.append(x.window)
            x.path = (verts, wins)
        d = target.depth
        vs = (n.vertex, *verts[:d])
        ws = [self.table.safe_intervals(n.vertex)[n.interval], *wins[:d]]
        return MoveSegment(vs, n.orientation), WindowSet(n.lb, ws)

    def dominated(self, n: Node, target: Reach) -> bool:
        """True when push() would drop any child for this reach: no profile beats the
        rest-to-rest time, so an earlier stored node wins. Stays true once true."""
        if not self.config.duplicate_detection:
            return False
        old = self._seen.get((target.vertex, n.orientation, target.ub, n.goal_index))
        if old is None:
            return False
        tf = self._fastest.get(target.depth)
        if tf is None:
            tf = self._fastest[target.depth] = rest_to_rest(target.depth, self.limits).duration
        return old.lb <= max(target.lb, n.lb + tf)

    def node_by_move(self, n: Node, target: Reach) -> Optional[Node]:
        if self.dominated(n, target):
            return None
        seg, ws = self.windows_for(n, target)
        t = time.perf_counter()
        prof = self.solver(seg.length, ws)
        self.stats.level3_time += time.perf_counter() - t
        self.stats.level3_calls += 1
        if prof is None:
            return None
        arrival = n.lb + prof.duration
        if arrival >= target.ub - EPS_T:
            return None
        act = move_action(n.lb, seg, prof)
        return Node(target.vertex, n.orientation, ActionKind.MOVE, target.interval, arrival,
                    target.ub, self.h(target.vertex, n.goal_index, n.orientation), n, act, n.goal_index)

    def can_move(self, n: Node) -> bool:
        return n.prev is not ActionKind.MOVE or self.config.consecutive_moves

    def expand(self, n: Node) -> None:
        if self.config.partial_expansion:
            self.expand_partial(n)
        else:
            self.expand_full(n)

    def expand_full(self, n: Node) -> None:
        if n.prev is not ActionKind.ROTATE:
            for c in self.rotate_children(n):
                self.push(c)
        if self.can_move(n):
            for r in self.move_intervals(n):
                c = self.node_by_move(n, r)
                if c is not None:
                    self.push(c)

    def expand_partial(self, n: Node) -> None:
        if not n.expanded:
            n.expanded = True
            if n.prev is not ActionKind.ROTATE:
                for c in self.rotate_children(n):
                    self.push(c)
            if self.can_move(n):
                reach = self.move_intervals(n)
                reach.sort(key=lambda r: (r.p, r.lb, r.depth))
                n.reach = deque(reach)
        reach = n.reach
        while reach and self.dominated(n, reach[0]):
            reach.popleft()
        if reach:
            c = self.node_by_move(n, reach.popleft())
            if c is not None:
                self.push(c)
        while reach and self.dominated(n, reach[0]):
            reach.popleft()
        if reach:
            n.fkey = n.reach[0].p
            self.push(n, reinsert=True)

    # -- plan extraction --------------------------------------------------------
    @staticmethod
    def actions_to(n: Node) -> list[TimedAction]:
        acts = []
        while n is not None:
            if n.action is not None:
                acts.append(n.action)
            n = n.parent
        acts.reverse()
        out = []
        for a in acts:
            if a.kind is ActionKind.MOVE and a.profile.leading_wait > 0:
                moving = a.profile.without_leading_wait()
                w = a.profile.duration - moving.duration
                out.append(wait_action(a.start, w, a.vertex, a.orientation))
                out.append(move_action(a.start + w, a.segment, moving))
            else:
                out.append(a)
        return out


class SSIPP(StationarySearch):
    """Optimal single-agent planner over a safe interval table."""

    def __init__(self, world, limits, solver, config=None):
        super().__init__(world, limits, solver, config)
        self._h = None

    def h(self, vertex: int, goal_index: int = 0, orientation: int = 0) -> float:
        return float(self._h[vertex, orientation])

    def h_many(self, vertices, goal_index=0, orientation=0):
        return self._h[vertices, int(orientation)].tolist()

    def plan(self, start: int, start_orientation: Orientation, goal: int,
             table: SafeIntervalTable, agent: int = 0, start_time: float = 0.0) -> Optional[Plan]:
        t_begin = time.perf_counter()
        self.table = table
        self._open, self._seen = [], {}
        self._h = heuristic(self.world, goal, self.limits, self.config.heuristic)
        last = table.safe_intervals(goal)[-1:]
        if not last or last[0][1] != INF:
            return None  # the goal is never free for good
        try:
            return self._search(start, start_orientation, goal, agent, start_time)
        finally:
            self.stats.search_time += time.perf_counter() - t_begin

    def _search(self, start, start_o, goal, agent, start_time) -> Optional[Plan]:
        tab = self.table
        i = tab.index_containing(start, start_time)
        if i is None or not math.isfinite(self._h[start, start_o]):
            return None
        ub = tab.safe_intervals(start)[i][1]
        root = Node(start, start_o, None, i, start_time, ub, self.h(start, 0, start_o))
        self.push(root)
        best: Optional[Node] = None
        while True:
            n = self.pop()
            if n is None:
                break
            self.stats.pops += 1
            self.check_deadline()
            f = self.key(n)[0]
            if best is not None and f >= best.g:
                break
            self.stats.popped_f.append(f)
            if n.vertex == goal and n.ub == INF:
                if best is None or n.g < best.g:
                    best = n
                continue
            self.expand(n)
        if best is None:
            return None
        return Plan(agent, start, start_o, self.actions_to(best), start_time, holds_end=True)


def plan_single(world: GridWorld, limits: KinodynamicLimits, solver, start: int,
                start_orientation: Orientation, goal: int,
                table: Optional[SafeIntervalTable] = None,
                config: Optional[SearchConfig] = None, agent: int = 0) -> Optional[Plan]:
    if table is None:
        table = SafeIntervalTable(world)
    return SSIPP(world, limits, solver, config).plan(start, start_orientation, goal, table, agent)
