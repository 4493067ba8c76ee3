"""Generated stand-ins for the benchmark maps plus a small annotated lifelong warehouse."""
from __future__ import annotations

import random
from collections import deque
from typing import Optional

from .bench_io import ScenarioEntry
from .domain import GridWorld


def components(world: GridWorld) -> list[list[int]]:
    seen = [False] * world.num_vertices
    out = []
    for s in world.free_vertices():
        if seen[s]:
            continue
        seen[s] = True
        comp, q = [], deque([s])
        while q:
            v = q.popleft()
            comp.append(v)
            for u in world.neighbors(v):
                if not seen[u]:
                    seen[u] = True
                    q.append(u)
        out.append(comp)
    return out


def keep_largest_component(world: GridWorld) -> GridWorld:
    comps = components(world)
    if len(comps) <= 1:
        return world
    big = set(max(comps, key=len))
    blocked = tuple(not (v in big) for v in range(world.num_vertices))
    return GridWorld(world.width, world.height, blocked, world.cell_length, world.name)


def empty_map(w: int, h: int) -> GridWorld:
    return GridWorld.empty(w, h, name=f"empty-{w}-{h}")


def random_map(w: int = 32, h: int = 32, percent: int = 10, seed: int = 0) -> GridWorld:
    """Uniform random obstacles; unreachable pockets are filled in."""
    rng = random.Random(seed)
    n = w * h
    k = round(n * percent / 100)
    cells = rng.sample(range(n), k)
    blocked = [False] * n
    for c in cells:
        blocked[c] = True
    g = GridWorld(w, h, tuple(blocked), name=f"random-{w}-{h}-{percent}")
    return keep_largest_component(g)


def warehouse_map(shelf_len: int = 10, block_cols: int = 10, block_rows: int = 20,
                  gap: int = 1, margin: int = 26, rack_h: int = 2, aisle: int = 1,
                  border: int = 2) -> GridWorld:
    """Rack blocks laid out in a grid; defaults give a 161x63 map close to warehouse-10-20-10-2-1."""
    w = 2 * margin + block_cols * shelf_len + (block_cols - 1) * gap
    h = 2 * border + block_rows * rack_h + (block_rows - 1) * aisle
    blocked = [False] * (w * h)
    for r in range(block_rows):
        y0 = border + r * (rack_h + aisle)
        for c in range(block_cols):
            x0 = margin + c * (shelf_len + gap)
            for y in range(y0, y0 + rack_h):
                for x in range(x0, x0 + shelf_len):
                    blocked[y * w + x] = True
    return GridWorld(w, h, tuple(blocked), name="warehouse-10-20-10-2-1")


SMALL_WAREHOUSE = [
    "....................",
    "....................",
    "....@@@@@..@@@@@....",
    "....@@@@@..@@@@@....",
    "....................",
    "....@@@@@..@@@@@....",
    "....@@@@@..@@@@@....",
    "....................",
    "....@@@@@..@@@@@....",
    "....@@@@@..@@@@@....",
    "....................",
    "....................",
]


def small_warehouse() -> tuple[GridWorld, list[int], list[int]]:
    """20x12 lifelong map: racks in the middle, pick cells beside racks, stations on the left."""
    world = GridWorld.from_rows(SMALL_WAREHOUSE, name="warehouse-small-20-12")
    shelves = [world.vertex(x, y) for y in (1, 4, 7, 10) for x in (5, 7, 12, 14)]
    stations = [world.vertex(0, y) for y in (2, 5, 8)]
    return world, shelves, stations


def builtin_map(name: str) -> GridWorld:
    if name.startswith("empty-"):
        _, w, h = name.split("-")
        return empty_map(int(w), int(h))
    if name == "random-32-32-10":
        return random_map()
    if name == "warehouse-10-20-10-2-1":
        return warehouse_map()
    if name == "warehouse-small-20-12":
        return small_warehouse()[0]
    raise KeyError(f"no built-in map {name!r}")


def random_scenario(world: GridWorld, n: int, seed: int = 0,
                    rng: Optional[random.Random] = None) -> list[ScenarioEntry]:
    """n entries with pairwise distinct starts and distinct goals in one connected component."""
    rng = rng or random.Random(seed)
    comp = max(components(world), key=len)
    if n > len(comp):
        raise ValueError(f"{n} agents do not fit in {len(comp)} reachable cells")
    comp = sorted(comp)
    starts = rng.sample(comp, n)
    goals = rng.sample(comp, n)
    out = []
    for i, (s, g) in enumerate(zip(starts, goals)):
        out.append(ScenarioEntry(i // 10, world.name + ".map", world.width, world.height,
                                 world.coords(s), world.coords(g), 0.0))
    return out
