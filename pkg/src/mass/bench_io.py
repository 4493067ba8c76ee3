"""MovingAI map/scenario ingestion, run configs, and result records (JSON lines)."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, Union

from .domain import (ActionKind, GridWorld, KinodynamicLimits, MoveSegment, Orientation, Plan,
                     TaskKind, TimedAction)
from .profiles import profile_from_dict

FREE_CHARS = set(".G")
BLOCKED_CHARS = set("@OTW")
CONFIG_SCHEMA = 1
RESULT_SCHEMA = 1

Text = Union[str, bytes]


def _lines(text: Text) -> list[str]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


# --- maps -----------------------------------------------------------------

def parse_map(text: Text, name: str = "") -> GridWorld:
    lines = _lines(text)
    it = iter(enumerate(lines, 1))
    header = {}
    for lineno, line in it:
        s = line.strip()
        if not s:
            continue
        if s == "map":
            break
        parts = s.split()
        if len(parts) != 2 or parts[0] not in ("type", "height", "width"):
            raise ValueError(f"line {lineno}: bad map header {s!r}")
        header[parts[0]] = parts[1]
    else:
        raise ValueError("map header has no 'map' line")
    try:
        h, w = int(header["height"]), int(header["width"])
    except (KeyError, ValueError):
        raise ValueError("map header needs integer height and width") from None
    if h <= 0 or w <= 0:
        raise ValueError("map dimensions must be positive")
    rows = []
    for lineno, line in it:
        row = line.rstrip("\n")
        if not row.strip() and len(rows) >= h:
            continue
        rows.append((lineno, row))
    if len(rows) != h:
        raise ValueError(f"header says height {h} but {len(rows)} rows given")
    blocked = []
    for lineno, row in rows:
        if len(row) != w:
            raise ValueError(f"line {lineno}: row length {len(row)} != width {w}")
        for ch in row:
            if ch in FREE_CHARS:
                blocked.append(False)
            elif ch in BLOCKED_CHARS:
                blocked.append(True)
            else:
                raise ValueError(f"line {lineno}: unknown map character {ch!r}")
    return GridWorld(w, h, tuple(blocked), name=name)


def write_map(world: GridWorld) -> str:
    out = ["type octile", f"height {world.height}", f"width {world.width}", "map"]
    for y in range(world.height):
        out.append("".join("@" if world.blocked[y * world.width + x] else "."
                           for x in range(world.width)))
    return "\n".join(out) + "\n"


# --- scenarios ------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioEntry:
    bucket: int
    map_name: str
    width: int
    height: int
    start: tuple[int, int]
    goal: tuple[int, int]
    optimal: float = 0.0


def parse_scenario(text: Text, world: GridWorld) -> list[ScenarioEntry]:
    lines = _lines(text)
    first = next((l.strip() for l in lines if l.strip()), "")
    if first.split() != ["version", "1"] and first.split() != ["version", "1.0"]:
        raise ValueError(f"unsupported scenario version line {first!r}")
    out = []
    seen_header = False
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if not seen_header:
            seen_header = True
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            cols = line.split()
        if len(cols) < 8:
            raise ValueError(f"line {lineno}: expected 9 columns")
        try:
            bucket = int(cols[0])
            w, h = int(cols[2]), int(cols[3])
            sx, sy, gx, gy = (int(c) for c in cols[4:8])
            opt = float(cols[8]) if len(cols) > 8 and cols[8].strip() else 0.0
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
        for what, (x, y) in (("start", (sx, sy)), ("goal", (gx, gy))):
            if not world.in_bounds(x, y):
                raise ValueError(f"line {lineno}: {what} ({x}, {y}) out of bounds")
            if not world.is_free(world.vertex(x, y)):
                raise ValueError(f"line {lineno}: {what} ({x}, {y}) is blocked")
        out.append(ScenarioEntry(bucket, cols[1], w, h, (sx, sy), (gx, gy), opt))
    return out


def write_scenario(entries: Iterable[ScenarioEntry]) -> str:
    out = ["version 1"]
    for e in entries:
        out.append("\t".join([str(e.bucket), e.map_name, str(e.width), str(e.height),
                              str(e.start[0]), str(e.start[1]), str(e.goal[0]), str(e.goal[1]),
                              repr(float(e.optimal))]))
    return "\n".join(out) + "\n"


# --- annotations (shelves / stations for lifelong runs) -------------------

def parse_annotations(text: Text, world: GridWorld) -> dict[str, list[int]]:
    """Lines of ``shelf x y`` or ``station x y``; '#' starts a comment."""
    out = {"shelf": [], "station": []}
    for lineno, line in enumerate(_lines(text), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) != 3 or parts[0] not in out:
            raise ValueError(f"line {lineno}: expected 'shelf x y' or 'station x y'")
        x, y = int(parts[1]), int(parts[2])
        if not world.in_bounds(x, y) or not world.is_free(world.vertex(x, y)):
            raise ValueError(f"line {lineno}: ({x}, {y}) is not a free cell")
        out[parts[0]].append(world.vertex(x, y))
    if not out["shelf"] or not out["station"]:
        raise ValueError("annotation file needs at least one shelf and one station")
    return out


def write_annotations(world: GridWorld, shelves: Iterable[int], stations: Iterable[int]) -> str:
    out = [f"shelf {x} {y}" for x, y in map(world.coords, shelves)]
    out += [f"station {x} {y}" for x, y in map(world.coords, stations)]
    return "\n".join(out) + "\n"


# --- configs ----------------------------------------------------------------

@dataclass
class RunConfig:
    level1: str = "pbs"
    level3: str = "bas"
    partial_expansion: bool = True
    duplicate_detection: bool = True
    heuristic: str = "distance"
    v_max: float = 2.0
    a_max: float = 0.5
    a_min: float = -0.5
    rotate90_time: float = math.pi / 2
    rotate180_time: float = math.pi
    cutoff: float = 60.0
    bcs_epsilon: float = 1e-3
    bcs_pieces: int = 100
    seed: int = 0
    # lifelong only; tw = 0 means single-shot
    tw: float = 0.0
    th: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        self.level1 = self.level1.lower()
        self.level3 = self.level3.lower()
        if self.level1 not in ("pp", "pbs"):
            raise ValueError(f"level1 must be pp or pbs, got {self.level1!r}")
        if self.level3 not in ("bas", "bcs"):
            raise ValueError(f"level3 must be bas or bcs, got {self.level3!r}")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        if self.tw or self.th:
            if not (self.th > 0 and self.tw >= self.th):
                raise ValueError("lifelong settings need tw >= th > 0")

    @property
    def limits(self) -> KinodynamicLimits:
        return KinodynamicLimits(self.v_max, self.a_max, self.a_min,
                                 self.rotate90_time, self.rotate180_time)

    @property
    def lifelong(self) -> bool:
        return self.th > 0

    def planner_config(self):
        from .mapf import PlannerConfig
        return PlannerConfig(level1=self.level1, sps=self.level3,
                             partial_expansion=self.partial_expansion,
                             duplicate_detection=self.duplicate_detection,
                             heuristic=self.heuristic, cutoff=self.cutoff,
                             bcs_epsilon=self.bcs_epsilon, bcs_pieces=self.bcs_pieces,
                             seed=self.seed)


def load_config(text: Text) -> RunConfig:
    d = json.loads(text)
    if not isinstance(d, dict):
        raise ValueError("config must be a flat object")
    ver = d.pop("schema_version", None)
    if ver != CONFIG_SCHEMA:
        raise ValueError(f"config schema_version must be {CONFIG_SCHEMA}, got {ver!r}")
    known = {f.name for f in fields(RunConfig)}
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    for k, v in d.items():
        if isinstance(v, (dict, list)):
            raise ValueError(f"config key {k!r} must be a scalar")
    return RunConfig(**d)


def dump_config(cfg: RunConfig) -> str:
    d = {"schema_version": CONFIG_SCHEMA, **asdict(cfg)}
    return json.dumps(d, sort_keys=True, indent=1) + "\n"


# --- plans and result records ------------------------------------------------

def action_to_dict(a: TimedAction, world: GridWorld) -> dict:
    d = {"kind": a.kind.value, "start": a.start, "duration": a.duration,
         "vertex": list(world.coords(a.vertex)), "orientation": a.orientation.short}
    if a.kind is ActionKind.ROTATE:
        d["to"] = a.to_orientation.short
    elif a.kind is ActionKind.MOVE:
        d["vertices"] = [list(world.coords(v)) for v in a.segment.vertices]
        d["profile"] = a.profile.to_dict()
    elif a.kind is ActionKind.TASK:
        d["task"] = a.task.value
    return d


def action_from_dict(d: dict, world: GridWorld) -> TimedAction:
    kind = ActionKind(d["kind"])
    o = Orientation.parse(d["orientation"])
    v = world.vertex(*d["vertex"])
    a = TimedAction(kind, float(d["start"]), float(d["duration"]), v, o)
    if kind is ActionKind.ROTATE:
        a = TimedAction(kind, a.start, a.duration, v, o, to_orientation=Orientation.parse(d["to"]))
    elif kind is ActionKind.MOVE:
        seg = MoveSegment(tuple(world.vertex(*xy) for xy in d["vertices"]), o)
        a = TimedAction(kind, a.start, a.duration, v, o, segment=seg,
                        profile=profile_from_dict(d["profile"]))
    elif kind is ActionKind.TASK:
        a = TimedAction(kind, a.start, a.duration, v, o, task=TaskKind(d["task"]))
    return a


def plan_to_dict(plan: Plan, world: GridWorld) -> dict:
    return {"agent": plan.agent, "start": list(world.coords(plan.start_vertex)),
            "orientation": plan.start_orientation.short, "start_time": plan.start_time,
            "holds_end": plan.holds_end,
            "actions": [action_to_dict(a, world) for a in plan.actions]}


def plan_from_dict(d: dict, world: GridWorld) -> Plan:
    return Plan(int(d["agent"]), world.vertex(*d["start"]), Orientation.parse(d["orientation"]),
                [action_from_dict(a, world) for a in d["actions"]],
                start_time=float(d.get("start_time", 0.0)), holds_end=bool(d.get("holds_end", True)))


def result_record(name: str, result, world: GridWorld, config: Optional[RunConfig] = None,
                  agents: Optional[int] = None, timing: bool = True) -> dict:
    """One JSON-able record for a single-shot run (a mapf.SolveResult)."""
    rec = {"schema": RESULT_SCHEMA, "instance": name, "map": world.name,
           "agents": agents if agents is not None else len(result.plans),
           "success": bool(result.success), "status": result.status}
    if config is not None:
        rec["config"] = asdict(config)
    if result.success:
        rec["soc"] = result.soc
        rec["makespan"] = result.makespan
        rec["plans"] = [plan_to_dict(p, world) for p in result.plans]
    elif result.failed_agent is not None:
        rec["failed_agent"] = result.failed_agent
    if timing:
        rec["runtime"] = dict(result.runtime)
    rec["counters"] = dict(result.stats)
    return rec


def dumps_record(rec: dict) -> str:
    # allow_nan off: an infinite value in a record is a bug, not data
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_results(records: Iterable[dict]) -> bytes:
    return "".join(dumps_record(r) + "\n" for r in records).encode("utf-8")


def read_results(data: Text) -> list[dict]:
    out = []
    for lineno, line in enumerate(_lines(data), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {lineno}: {e}") from None
        if not isinstance(rec, dict):
            raise ValueError(f"line {lineno}: record is not an object")
        out.append(rec)
    return out


def plans_from_record(rec: dict, world: GridWorld) -> list[Plan]:
    return [plan_from_dict(p, world) for p in rec.get("plans", [])]
