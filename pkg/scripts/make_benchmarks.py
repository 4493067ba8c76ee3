"""Write generated maps, random scenarios and the lifelong annotation file to a folder.

    python scripts/make_benchmarks.py benchmarks/ --scens 5
"""
import argparse
from pathlib import Path

from mass.bench_io import write_annotations, write_map, write_scenario
from mass.maps import builtin_map, random_scenario, small_warehouse

MAPS = {"empty-8-8": 32, "empty-16-16": 120, "random-32-32-10": 200,
        "warehouse-10-20-10-2-1": 200, "warehouse-small-20-12": 30}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=Path)
    ap.add_argument("--scens", type=int, default=5, help="random scenarios per map")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, n in MAPS.items():
        world = builtin_map(name)
        (args.out / f"{name}.map").write_text(write_map(world))
        for k in range(1, args.scens + 1):
            entries = random_scenario(world, n, seed=1000 * k + len(name))
            (args.out / f"{name}-random-{k}.scen").write_text(write_scenario(entries))
    world, shelves, stations = small_warehouse()
    (args.out / "warehouse-small-20-12.annot").write_text(write_annotations(world, shelves, stations))
    print(f"wrote {len(MAPS)} maps to {args.out}")


if __name__ == "__main__":
    main()
