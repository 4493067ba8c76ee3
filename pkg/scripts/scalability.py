"""Runtime breakdown per level for growing agent counts (one random scenario per count).

    python scripts/scalability.py --map warehouse-10-20-10-2-1 --agents 10 25 50 --cutoff 900
"""
import argparse
import json

from mass.executor import validate
from mass.mapf import Agent, Instance, PlannerConfig, solve
from mass.maps import builtin_map, random_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--map", default="warehouse-10-20-10-2-1")
    ap.add_argument("--agents", type=int, nargs="+", default=[10, 25, 50])
    ap.add_argument("--sps", default="bas")
    ap.add_argument("--level1", default="pbs")
    ap.add_argument("--heuristic", default="relaxed")
    ap.add_argument("--cutoff", type=float, default=300.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="one JSON object per line instead of a table")
    args = ap.parse_args()

    world = builtin_map(args.map)
    if not args.json:
        print(f"{'agents':>6} {'status':>8} {'total':>8} {'L1':>7} {'L2':>8} {'L3':>7} {'PT':>5} {'SoC':>10}")
    for n in args.agents:
        sc = random_scenario(world, n, seed=args.seed)
        inst = Instance(world, [Agent(i, world.vertex(*e.start), world.vertex(*e.goal))
                                for i, e in enumerate(sc)])
        cfg = PlannerConfig(level1=args.level1, sps=args.sps, heuristic=args.heuristic,
                            cutoff=args.cutoff, seed=args.seed)
        res = solve(inst, cfg)
        rt = res.runtime
        soc = res.soc if res.success else float("nan")
        if res.success:
            assert validate(res.plans, world, inst.limits, dt=0.05).ok
        if args.json:
            print(json.dumps({"agents": n, "status": res.status, "runtime": rt,
                              "stats": res.stats, "soc": res.soc if res.success else None}))
        else:
            print(f"{n:>6} {res.status:>8} {rt['total']:>8.2f} {rt['level1']:>7.2f} "
                  f"{rt['level2']:>8.2f} {rt['level3']:>7.2f} {res.stats.get('pt_expanded', '-'):>5} "
                  f"{soc:>10.2f}", flush=True)


if __name__ == "__main__":
    main()
