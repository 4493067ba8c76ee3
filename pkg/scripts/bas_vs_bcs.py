"""Success rate and mean SoC of MASS with BAS and with BCS on a small map.

    python scripts/bas_vs_bcs.py --map empty-16-16 --agents 2 4 6 8 10 --runs 10
"""
import argparse
import statistics

from mass.mapf import Agent, Instance, PlannerConfig, solve
from mass.maps import builtin_map, random_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--map", default="empty-16-16")
    ap.add_argument("--agents", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--cutoff", type=float, default=60.0)
    args = ap.parse_args()
    world = builtin_map(args.map)
    print("agents  sps  solved  mean_soc  mean_gap_vs_bcs")
    for n in args.agents:
        socs = {"bas": {}, "bcs": {}}
        for k in range(args.runs):
            sc = random_scenario(world, n, seed=k)
            inst = Instance(world, [Agent(i, world.vertex(*e.start), world.vertex(*e.goal))
                                    for i, e in enumerate(sc)])
            for sps in socs:
                res = solve(inst, PlannerConfig(sps=sps, cutoff=args.cutoff))
                if res.success:
                    socs[sps][k] = res.soc
        both = sorted(set(socs["bas"]) & set(socs["bcs"]))
        for sps in ("bas", "bcs"):
            vals = list(socs[sps].values())
            gap = statistics.fmean((socs[sps][k] - socs["bcs"][k]) / socs["bcs"][k]
                                   for k in both) if both else float("nan")
            mean = statistics.fmean(vals) if vals else float("nan")
            print(f"{n:>6}  {sps}  {len(vals):>3}/{args.runs:<3} {mean:>9.2f}  {gap:>+10.4f}")


if __name__ == "__main__":
    main()
