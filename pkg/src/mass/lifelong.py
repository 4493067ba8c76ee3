"""Lifelong operation: windowed SSIPP, adaptive windows and the rolling episode loop."""
from __future__ import annotations

import math
import random
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .domain import (EPS_T, INF, ActionKind, GridWorld, KinodynamicLimits, Orientation, Plan,
                     TaskKind, TimedAction, task_action, wait_action)
from .occupancy import SafeIntervalTable
from .ssipp import Node, PlannerCutoff, SearchConfig, StationarySearch, heuristic
from .sps import make_solver


@dataclass(frozen=True)
class Goal:
    vertex: int
    task: TaskKind
    duration: float = 2.0


class WindowedSSIPP(StationarySearch):
    """Best-first search on f_win = max(W, g) + h over a goal list.

    `W` is the absolute window end.  Any node at or beyond W must sit in an
    unbounded safe interval, so the plan to the incumbent can be committed as is
    and the agent may hold its last vertex for the rest of the episode.
    """

    def __init__(self, world, limits, solver, config=None, use_fwin: bool = True):
        super().__init__(world, limits, solver, config)
        self.use_fwin = use_fwin
        self.window_end = 0.0
        self.goals: list[Goal] = []
        self._dist: list[np.ndarray] = []
        self._rest: list[float] = []

    def f_of(self, lb: float, h: float) -> float:
        if self.use_fwin:
            return max(self.window_end, lb) + h
        return lb + h

    def h(self, vertex: int, goal_index: int, orientation: int = 0) -> float:
        if goal_index >= len(self.goals):
            return 0.0
        return float(self._dist[goal_index][vertex, orientation]) + self._rest[goal_index]

    def _prepare(self, goals: list[Goal]) -> None:
        self.goals = list(goals)
        self._dist = [heuristic(self.world, g.vertex, self.limits, self.config.heuristic)
                      for g in self.goals]
        # remaining cost after reaching goal j: its task, then the later legs and tasks
        rest = [0.0] * len(self.goals)
        acc = 0.0
        for j in range(len(self.goals) - 1, -1, -1):
            acc += self.goals[j].duration
            rest[j] = acc
            if j > 0:
                acc += float(self._dist[j][self.goals[j - 1].vertex].min())
        self._rest = rest

    def push(self, n: Node, reinsert: bool = False) -> None:
        if not reinsert and n.lb >= self.window_end - EPS_T and n.ub != INF:
            return  # would be committed past W without a place to stay
        super().push(n, reinsert)

    def plan(self, start: int, start_orientation: Orientation, goals: list[Goal],
             table: SafeIntervalTable, window_end: float, agent: int = 0,
             start_time: float = 0.0, holds_end: bool = True) -> Optional[Plan]:
        t_begin = time.perf_counter()
        self.table = table
        self._open, self._seen = [], {}
        self.window_end = window_end
        self._prepare(goals)
        try:
            n = self._search(start, start_orientation, start_time)
        finally:
            self.stats.search_time += time.perf_counter() - t_begin
        if n is None:
            return None
        self.completed_goals = n.goal_index
        return Plan(agent, start, start_orientation, self.actions_to(n), start_time,
                    holds_end=holds_end)

    def _search(self, start, start_o, start_time) -> Optional[Node]:
        tab = self.table
        i = tab.index_containing(start, start_time)
        if i is None:
            return None
        ub = tab.safe_intervals(start)[i][1]
        root = Node(start, start_o, None, i, start_time, ub, self.h(start, 0, start_o))
        if not math.isfinite(root.h):
            return None
        self.push(root)
        best: Optional[Node] = None
        best_f = INF
        W = self.window_end
        while True:
            n = self.pop()
            if n is None:
                break
            self.stats.pops += 1
            self.check_deadline()
            f = self.key(n)[0]
            # rotations inside the window tie with their parent, so ties are explored,
            # except when the incumbent has nothing left to do
            if f > best_f + EPS_T or (f >= best_f and best.goal_index >= len(self.goals)):
                break
            self.stats.popped_f.append(f)
            if n.ub == INF and not n.expanded:
                nf = self.f_of(n.lb, n.h)
                if nf < best_f:
                    best, best_f = n, nf
            gi = n.goal_index
            if not n.expanded and gi < len(self.goals) and n.vertex == self.goals[gi].vertex \
                    and n.lb < W:
                goal = self.goals[gi]
                lb = n.lb + goal.duration
                if lb < n.ub:
                    act = task_action(n.lb, goal.duration, n.vertex, n.orientation, goal.task)
                    self.push(Node(n.vertex, n.orientation, ActionKind.TASK, n.interval, lb,
                                   n.ub, self.h(n.vertex, gi + 1, n.orientation), n, act, gi + 1))
            if n.lb < W:
                self.expand(n)
        return best


def commit_window(plan: Plan, window_end: float, trailing_wait: bool = True) -> Plan:
    """Keep actions that start before the window end (the crossing one stays whole).

    A wait that only delays the following move belongs to that move.
    """
    acts = []
    for a in plan.actions:
        if a.start < window_end - EPS_T:
            acts.append(a)
        elif acts and acts[-1].kind is ActionKind.WAIT and acts[-1].end == a.start \
                and a.kind is ActionKind.MOVE and acts[-1].start < window_end - EPS_T:
            acts.append(a)
            break
        else:
            break
    return Plan(plan.agent, plan.start_vertex, plan.start_orientation, acts, plan.start_time,
                holds_end=trailing_wait)


# --- task assignment -----------------------------------------------------------

class FixedGoals:
    """Hands out a fixed goal list per agent once (scripted scenarios)."""

    def __init__(self, goals: dict[int, list[Goal]]):
        self.pending = {a: list(gs) for a, gs in goals.items()}

    def top_up(self, queues: dict[int, deque]) -> dict[int, list[Goal]]:
        added = {}
        for a in sorted(queues):
            gs = self.pending.pop(a, [])
            queues[a].extend(gs)
            if gs:
                added[a] = gs
        return added


class TaskAssigner:
    """Shelf (attach) -> station -> same shelf (detach), repeated with fresh random picks."""

    def __init__(self, shelves: list[int], stations: list[int], seed: int = 0,
                 durations: Optional[dict] = None, lookahead: int = 3):
        if not shelves or not stations:
            raise ValueError("need shelves and stations")
        self.shelves = list(shelves)
        self.stations = list(stations)
        self.rng = random.Random(seed)
        self.durations = {TaskKind.ATTACH: 2.0, TaskKind.DETACH: 2.0, TaskKind.STATION: 2.0}
        if durations:
            self.durations.update(durations)
        self.lookahead = lookahead
        self._phase: dict[int, int] = {}
        self._shelf: dict[int, int] = {}

    def next_goal(self, agent: int) -> Goal:
        ph = self._phase.get(agent, 0)
        self._phase[agent] = (ph + 1) % 3
        if ph == 0:
            self._shelf[agent] = self.rng.choice(self.shelves)
            return Goal(self._shelf[agent], TaskKind.ATTACH, self.durations[TaskKind.ATTACH])
        if ph == 1:
            return Goal(self.rng.choice(self.stations), TaskKind.STATION,
                        self.durations[TaskKind.STATION])
        return Goal(self._shelf[agent], TaskKind.DETACH, self.durations[TaskKind.DETACH])

    def top_up(self, queues: dict[int, deque]) -> dict[int, list[Goal]]:
        added = {}
        for a in sorted(queues):
            q = queues[a]
            new = []
            while len(q) < self.lookahead:
                g = self.next_goal(a)
                q.append(g)
                new.append(g)
            if new:
                added[a] = new
        return added


# --- episode loop ----------------------------------------------------------------

@dataclass
class LifelongConfig:
    tw: float = 20.0
    th: float = 10.0
    duration: float = 300.0
    sps: str = "bas"
    seed: int = 0
    trailing_wait: bool = True
    use_fwin: bool = True
    partial_expansion: bool = True
    heuristic: str = "distance"
    max_segment: Optional[int] = None
    consecutive_moves: bool = False
    episode_cutoff: float = 10.0
    pp_restarts: int = 10
    lookahead: int = 3
    task_duration: float = 2.0
    bcs_epsilon: float = 1e-3
    bcs_pieces: int = 100

    def __post_init__(self):
        if not (self.th > 0 and self.tw >= self.th):
            raise ValueError("need tw >= th > 0")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @classmethod
    def stop_and_go(cls, **kw) -> "LifelongConfig":
        """Baseline that halts at every cell: unit moves, chained without rotations."""
        kw.setdefault("sps", "bas")
        return cls(max_segment=1, consecutive_moves=True, **kw)


@dataclass
class AgentState:
    vertex: int
    orientation: Orientation
    t_e: float
    carry: Optional[TimedAction] = None


@dataclass
class LifelongResult:
    config: LifelongConfig
    episodes: list[dict]
    executed: list[Plan]
    completions: list[tuple[int, float, str]]  # (agent, time, task)
    failures: int

    @property
    def throughput(self) -> float:
        h = self.config.duration
        return sum(1 for _, t, _ in self.completions if t <= h + EPS_T) / h

    def completed(self, until: Optional[float] = None) -> int:
        until = self.config.duration if until is None else until
        return sum(1 for _, t, _ in self.completions if t <= until + EPS_T)


def next_start(plan: Plan, T: float) -> AgentState:
    """Where and when an agent can start its next episode plan given replanning time T."""
    v, o = plan.start_vertex, plan.start_orientation
    for a in plan.actions:
        if a.start >= T - EPS_T:
            break
        if a.end > T + EPS_T and a.kind is not ActionKind.WAIT:
            return AgentState(a.end_vertex, a.end_orientation, a.end, a)
        v, o = a.end_vertex, a.end_orientation
    return AgentState(v, o, max(T, plan.start_time))


def _carry_plan(agent: int, a: TimedAction) -> Plan:
    return Plan(agent, a.vertex, a.orientation, [a], a.start, holds_end=False)


class LifelongRunner:
    def __init__(self, world: GridWorld, shelves: list[int], stations: list[int],
                 n_agents: int, config: LifelongConfig,
                 limits: KinodynamicLimits = KinodynamicLimits(),
                 starts: Optional[list[tuple[int, Orientation]]] = None, assigner=None):
        self.world = world
        self.config = config
        self.limits = limits
        self.rng = random.Random(config.seed)
        if starts is None:
            free = sorted(set(world.free_vertices()) - set(stations) - set(shelves))
            if len(free) < n_agents:
                free = world.free_vertices()
            picks = self.rng.sample(free, n_agents)
            starts = [(v, Orientation(self.rng.randrange(4))) for v in picks]
        self.starts = starts
        durs = {k: config.task_duration for k in TaskKind}
        self.assigner = assigner or TaskAssigner(shelves, stations, config.seed + 1, durs,
                                                 config.lookahead)
        self.queues = {i: deque() for i in range(n_agents)}
        self.current = [Plan(i, v, o, [], 0.0, holds_end=True) for i, (v, o) in enumerate(starts)]
        self.logged = [0] * n_agents
        self.executed: list[list[TimedAction]] = [[] for _ in range(n_agents)]
        self.completions: list[tuple[int, float, str]] = []
        self.solver = make_solver(config.sps, limits, config.bcs_epsilon, config.bcs_pieces)
        self.search_config = SearchConfig(partial_expansion=config.partial_expansion,
                                          heuristic=config.heuristic,
                                          max_segment=config.max_segment,
                                          consecutive_moves=config.consecutive_moves)
        self.level3_calls = 0

    # bookkeeping of what actually runs
    def _log_until(self, T: float, inclusive_end: bool = False) -> None:
        for i, p in enumerate(self.current):
            acts = p.actions
            while self.logged[i] < len(acts) and acts[self.logged[i]].start < T - EPS_T:
                a = acts[self.logged[i]]
                self.executed[i].append(a)
                self.logged[i] += 1
                if a.kind is ActionKind.TASK:
                    g = self.queues[i].popleft()
                    assert g.vertex == a.vertex and g.task == a.task, "task out of order"
                    self.completions.append((i, a.end, a.task.value))

    def _plan_episode(self, T: float, states: list[AgentState]) -> Optional[list[Plan]]:
        cfg = self.config
        W = T + cfg.tw
        n = len(states)
        carries = {i: _carry_plan(i, s.carry) for i, s in enumerate(states) if s.carry is not None}
        deadline = time.perf_counter() + cfg.episode_cutoff
        sc = SearchConfig(**{**asdict(self.search_config), "deadline": deadline})
        order = list(range(n))
        rng = random.Random(f"{cfg.seed}:{T!r}")
        for attempt in range(max(1, cfg.pp_restarts)):
            if attempt:
                rng.shuffle(order)
            plans: dict[int, Plan] = {}
            ok = True
            for i in order:
                obstacles = [c for j, c in carries.items() if j != i] + list(plans.values())
                table = SafeIntervalTable.build(obstacles, self.world)
                s = states[i]
                search = WindowedSSIPP(self.world, self.limits, self.solver, sc, cfg.use_fwin)
                goals = list(self.queues[i])[:cfg.lookahead]
                try:
                    p = search.plan(s.vertex, s.orientation, goals, table, W, agent=i,
                                    start_time=s.t_e, holds_end=True)
                except PlannerCutoff:
                    return None
                finally:
                    self.level3_calls += search.stats.level3_calls
                if p is None:
                    ok = False
                    break
                p = commit_window(p, W, cfg.trailing_wait)
                plans[i] = p
            if ok:
                out = []
                for i in range(n):
                    p = plans[i]
                    if i in carries:
                        c = states[i].carry
                        p = Plan(i, c.vertex, c.orientation, [c] + p.actions, c.start,
                                 holds_end=p.holds_end)
                    out.append(p)
                return out
            if time.perf_counter() > deadline:
                return None
        return None

    def run(self) -> LifelongResult:
        cfg = self.config
        episodes = []
        failures = 0
        k = 0
        while True:
            T = k * cfg.th
            if T >= cfg.duration - EPS_T:
                break
            self._log_until(T)
            states = [next_start(p, T) for p in self.current]
            added = self.assigner.top_up(self.queues)
            plans = self._plan_episode(T, states)
            ok = plans is not None
            if ok:
                for i, p in enumerate(plans):
                    ex = self.executed[i]
                    if ex and ex[-1].kind is ActionKind.WAIT and ex[-1].end > T + EPS_T:
                        w = ex.pop()
                        if T - w.start > EPS_T:
                            ex.append(wait_action(w.start, T - w.start, w.vertex, w.orientation))
                    self.current[i] = p
                    self.logged[i] = 1 if states[i].carry is not None else 0
            else:
                failures += 1
            episodes.append({
                "episode": k, "time": T, "success": ok,
                "assigned": {str(a): [[self.world.coords(g.vertex), g.task.value] for g in gs]
                             for a, gs in added.items()},
                "completed": len(self.completions),
            })
            k += 1
        self._log_until(cfg.duration)
        executed = [Plan(i, v, o, self.executed[i], 0.0, holds_end=True)
                    for i, (v, o) in enumerate(self.starts)]
        return LifelongResult(cfg, episodes, executed, self.completions, failures)


def run_lifelong(world: GridWorld, shelves: list[int], stations: list[int], n_agents: int,
                 config: LifelongConfig, limits: KinodynamicLimits = KinodynamicLimits(),
                 starts=None, assigner=None) -> LifelongResult:
    return LifelongRunner(world, shelves, stations, n_agents, config, limits, starts,
                          assigner).run()
