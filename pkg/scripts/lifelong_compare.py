"""Throughput of windowed MASS against the stop-at-every-cell baseline.

    python scripts/lifelong_compare.py --agents 6 --duration 300 --tw 10 20
"""
import argparse

from mass.domain import KinodynamicLimits
from mass.executor import validate
from mass.lifelong import LifelongConfig, run_lifelong
from mass.maps import small_warehouse


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--agents", type=int, default=6)
    ap.add_argument("--duration", type=float, default=300.0)
    ap.add_argument("--tw", type=float, nargs="+", default=[20.0])
    ap.add_argument("--th", type=float, default=10.0)
    ap.add_argument("--sps", default="bas")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = ap.parse_args()
    world, shelves, stations = small_warehouse()
    print("planner       tw   seed  throughput  completed  failed_eps  valid")
    for tw in args.tw:
        for seed in args.seeds:
            for name, make in (("mass", LifelongConfig), ("stop-and-go", LifelongConfig.stop_and_go)):
                cfg = make(tw=tw, th=min(args.th, tw), duration=args.duration, sps=args.sps,
                           seed=seed)
                r = run_lifelong(world, shelves, stations, args.agents, cfg)
                ok = validate(r.executed, world, KinodynamicLimits(), horizon=cfg.duration).ok
                print(f"{name:<12} {tw:>4.0f} {seed:>5}  {r.throughput:>10.4f}  {r.completed():>9}"
                      f"  {r.failures:>10}  {ok}", flush=True)


if __name__ == "__main__":
    main()
