"""Core vocabulary: grid world, orientations, kinodynamic limits, timed actions, plans."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

EPS_T = 1e-9  # time comparison tolerance, seconds
INF = math.inf


class Orientation(enum.IntEnum):
    EAST = 0
    NORTH = 1
    WEST = 2
    SOUTH = 3

    @property
    def delta(self) -> tuple[int, int]:
        # y grows downward (row index), so North is -1
        return _DELTAS[self]

    @property
    def short(self) -> str:
        return "ENWS"[self]

    @classmethod
    def parse(cls, s: str) -> "Orientation":
        s = s.strip().upper()
        for o in cls:
            if s in (o.name, o.short):
                return o
        raise ValueError(f"unknown orientation {s!r}")

    def turns_to(self, other: "Orientation") -> int:
        """Quarter turns needed to face `other` (0, 1 or 2)."""
        d = (other - self) % 4
        return 2 if d == 2 else (0 if d == 0 else 1)


_DELTAS = {
    Orientation.EAST: (1, 0),
    Orientation.NORTH: (0, -1),
    Orientation.WEST: (-1, 0),
    Orientation.SOUTH: (0, 1),
}


class ActionKind(str, enum.Enum):
    ROTATE = "rotate"
    MOVE = "move"
    WAIT = "wait"
    TASK = "task"


class TaskKind(str, enum.Enum):
    ATTACH = "attach"
    DETACH = "detach"
    STATION = "station"


@dataclass(frozen=True)
class GridWorld:
    """Four-neighbour grid. Vertex ids are row-major: ``v = y * width + x``."""

    width: int
    height: int
    blocked: tuple[bool, ...]
    cell_length: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(self.blocked) != self.width * self.height:
            raise ValueError(
                f"blocked has {len(self.blocked)} entries, expected {self.width * self.height}"
            )
        object.__setattr__(self, "_rays", {})

    def ray(self, v: int, o: "Orientation") -> tuple[int, ...]:
        """Free vertices met when driving straight from `v` along `o` (excluding `v`)."""
        key = (v, o)
        r = self._rays.get(key)
        if r is None:
            out = []
            u = self.step(v, o)
            while u is not None:
                out.append(u)
                u = self.step(u, o)
            r = self._rays[key] = tuple(out)
        return r

    @classmethod
    def from_rows(cls, rows: Sequence[str], name: str = "", cell_length: float = 1.0) -> "GridWorld":
        """Build from strings where '.' is free and anything else is blocked."""
        h = len(rows)
        w = len(rows[0]) if h else 0
        blocked = []
        for r in rows:
            if len(r) != w:
                raise ValueError("ragged rows")
            blocked.extend(c != "." for c in r)
        return cls(w, h, tuple(blocked), cell_length, name)

    @classmethod
    def empty(cls, width: int, height: int, name: str = "") -> "GridWorld":
        return cls(width, height, (False,) * (width * height), 1.0, name)

    @property
    def num_vertices(self) -> int:
        return self.width * self.height

    def vertex(self, x: int, y: int) -> int:
        return y * self.width + x

    def coords(self, v: int) -> tuple[int, int]:
        return v % self.width, v // self.width

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, v: int) -> bool:
        return 0 <= v < self.num_vertices and not self.blocked[v]

    def step(self, v: int, o: Orientation) -> Optional[int]:
        """Neighbour of `v` in direction `o`, or None when off-map or blocked."""
        x, y = self.coords(v)
        dx, dy = o.delta
        nx, ny = x + dx, y + dy
        if not self.in_bounds(nx, ny):
            return None
        u = self.vertex(nx, ny)
        return None if self.blocked[u] else u

    def neighbors(self, v: int) -> list[int]:
        out = []
        for o in Orientation:
            u = self.step(v, o)
            if u is not None:
                out.append(u)
        return out

    def free_vertices(self) -> list[int]:
        return [v for v in range(self.num_vertices) if not self.blocked[v]]

    def as_array(self) -> np.ndarray:
        return np.array(self.blocked, dtype=bool).reshape(self.height, self.width)


@dataclass(frozen=True)
class KinodynamicLimits:
    """Speed in cells/s, acceleration in cells/s^2, rotation durations in s."""

    v_max: float = 2.0
    a_max: float = 0.5
    a_min: float = -0.5
    rotate90_time: float = math.pi / 2
    rotate180_time: float = math.pi
    v_min: float = 0.0

    def __post_init__(self):
        if self.v_min != 0.0:
            raise ValueError("minimum speed must be zero")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if not (self.a_min < 0 < self.a_max):
            raise ValueError("need a_min < 0 < a_max")
        if self.rotate90_time <= 0 or self.rotate180_time <= 0:
            raise ValueError("rotation times must be positive")
        if self.rotate180_time > 2 * self.rotate90_time + EPS_T:
            raise ValueError("rotate180_time must not exceed two quarter turns")


def rotation_time(frm: Orientation, to: Orientation, limits: KinodynamicLimits) -> float:
    turns = frm.turns_to(to)
    if turns == 0:
        return 0.0
    return limits.rotate90_time if turns == 1 else limits.rotate180_time


def min_traversal_time(length: float, limits: KinodynamicLimits) -> float:
    """Relaxed travel time at top speed; ignores acceleration on purpose."""
    if length <= 0:
        raise ValueError("length must be positive")
    return length / limits.v_max


@dataclass(frozen=True)
class MoveSegment:
    """Straight run of vertices; ``vertices[0]`` is the start, ``vertices[-1]`` the end."""

    vertices: tuple[int, ...]
    orientation: Orientation

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def interior(self) -> tuple[int, ...]:
        return self.vertices[1:-1]

    def check(self, world: GridWorld) -> None:
        if self.length < 1:
            raise ValueError("segment needs at least one hop")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if world.step(a, self.orientation) != b:
                raise ValueError(f"segment not collinear/free at {a}->{b}")


@dataclass(frozen=True)
class TimedAction:
    kind: ActionKind
    start: float
    duration: float
    vertex: int  # vertex where the action begins
    orientation: Orientation  # orientation at the start
    to_orientation: Optional[Orientation] = None  # rotate only
    segment: Optional[MoveSegment] = None  # move only
    profile: Optional[object] = None  # move only, a SpeedProfile
    task: Optional[TaskKind] = None  # task only

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def end_vertex(self) -> int:
        return self.segment.end if self.kind is ActionKind.MOVE else self.vertex

    @property
    def end_orientation(self) -> Orientation:
        if self.kind is ActionKind.ROTATE:
            return self.to_orientation
        return self.orientation


def rotate_action(start: float, vertex: int, frm: Orientation, to: Orientation,
                  limits: KinodynamicLimits) -> TimedAction:
    return TimedAction(ActionKind.ROTATE, start, rotation_time(frm, to, limits), vertex, frm,
                       to_orientation=to)


def wait_action(start: float, duration: float, vertex: int, o: Orientation) -> TimedAction:
    return TimedAction(ActionKind.WAIT, start, duration, vertex, o)


def task_action(start: float, duration: float, vertex: int, o: Orientation,
                task: TaskKind) -> TimedAction:
    return TimedAction(ActionKind.TASK, start, duration, vertex, o, task=task)


def move_action(start: float, segment: MoveSegment, profile) -> TimedAction:
    return TimedAction(ActionKind.MOVE, start, profile.duration, segment.start,
                       segment.orientation, segment=segment, profile=profile)


@dataclass
class Plan:
    """Time-ordered actions of one agent.

    ``holds_end`` means the agent stays at its final vertex forever after the last
    action (single-shot goal semantics, or a trailing infinite Wait).
    """

    agent: int
    start_vertex: int
    start_orientation: Orientation
    actions: list[TimedAction] = field(default_factory=list)
    start_time: float = 0.0
    holds_end: bool = True

    @property
    def end_time(self) -> float:
        finite = [a.end for a in self.actions if math.isfinite(a.end)]
        return max(finite) if finite else self.start_time

    @property
    def arrival_time(self) -> float:
        """Completion time of the last finite action (the goal arrival)."""
        return self.end_time

    @property
    def final_vertex(self) -> int:
        return self.actions[-1].end_vertex if self.actions else self.start_vertex

    @property
    def final_orientation(self) -> Orientation:
        return self.actions[-1].end_orientation if self.actions else self.start_orientation

    def committed(self) -> list[TimedAction]:
        return [a for a in self.actions if a.kind is not ActionKind.WAIT]

    def check_alternation(self) -> bool:
        """No two consecutive committed moves, nor two consecutive rotates."""
        prev = None
        for a in self.committed():
            if a.kind in (ActionKind.MOVE, ActionKind.ROTATE) and a.kind == prev:
                return False
            prev = a.kind
        return True

    def state_at(self, t: float) -> tuple[int, Orientation]:
        """Vertex/orientation of the last stationary point at or before time t."""
        v, o = self.start_vertex, self.start_orientation
        for a in self.actions:
            if a.end <= t + EPS_T:
                v, o = a.end_vertex, a.end_orientation
            else:
                break
        return v, o
