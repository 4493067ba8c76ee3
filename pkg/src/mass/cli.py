"""Command-line driver: solve | lifelong | validate | bench.

Exit codes: 0 success, 1 usage or input error, 2 unsolved / cutoff / invalid plans.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from . import bench_io
from .domain import GridWorld, KinodynamicLimits, Orientation
from .executor import validate
from .lifelong import LifelongConfig, run_lifelong
from .mapf import Agent, Instance, PlannerConfig, solve
from .maps import builtin_map

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


def load_map(spec: str) -> GridWorld:
    p = Path(spec)
    if p.exists():
        return bench_io.parse_map(p.read_bytes(), name=p.stem)
    try:
        return builtin_map(spec)
    except KeyError:
        raise UsageError(f"map {spec!r} not found") from None


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _emit(lines: bytes, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(lines)
    else:
        sys.stdout.write(lines.decode("utf-8"))


def make_instance(world: GridWorld, entries, n: int, limits: KinodynamicLimits) -> Instance:
    if n < 1:
        raise UsageError("--agents must be positive")
    if n > len(entries):
        raise UsageError(f"--agents {n} exceeds the {len(entries)} scenario entries")
    agents = [Agent(i, world.vertex(*e.start), world.vertex(*e.goal), Orientation.EAST)
              for i, e in enumerate(entries[:n])]
    if len({a.start for a in agents}) < n or len({a.goal for a in agents}) < n:
        raise UsageError("scenario entries share a start or goal cell")
    return Instance(world, agents, limits)


def planner_config(args) -> PlannerConfig:
    return PlannerConfig(level1=args.level1, sps=args.sps, partial_expansion=args.pe == "on",
                         cutoff=args.cutoff, seed=args.seed)


def solve_one(world: GridWorld, entries, n: int, cfg: PlannerConfig, name: str,
              timing: bool = True) -> dict:
    inst = make_instance(world, entries, n, KinodynamicLimits())
    res = solve(inst, cfg)
    rec = bench_io.result_record(name, res, world, agents=n, timing=timing)
    rec["config"] = asdict(cfg)
    return rec


# --- subcommands ------------------------------------------------------------

def cmd_solve(args) -> int:
    world = load_map(args.map)
    entries = bench_io.parse_scenario(_read(args.scen), world)
    rec = solve_one(world, entries, args.agents, planner_config(args),
                    f"{Path(args.scen).name}:{args.agents}", timing=not args.no_timing)
    _emit(bench_io.write_results([rec]), args.out)
    if args.out:
        print(f"{rec['status']}: soc={rec.get('soc', 'n/a')} -> {args.out}", file=sys.stderr)
    return EXIT_OK if rec["success"] else EXIT_FAIL


def cmd_lifelong(args) -> int:
    world = load_map(args.map)
    ann = bench_io.parse_annotations(_read(args.annot), world)
    try:
        cfg = LifelongConfig(tw=args.tw, th=args.th, duration=args.duration, sps=args.sps,
                             seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    res = run_lifelong(world, ann["shelf"], ann["station"], args.agents, cfg)
    rep = validate(res.executed, world, KinodynamicLimits(), horizon=cfg.duration)
    records = [{"type": "episode", **ep} for ep in res.episodes]
    records.append({"type": "summary", "map": world.name, "agents": args.agents,
                    "config": asdict(cfg), "throughput": res.throughput,
                    "completed": res.completed(), "failed_episodes": res.failures,
                    "valid": rep.ok, "horizon": cfg.duration,
                    "plans": [bench_io.plan_to_dict(p, world) for p in res.executed]})
    _emit(bench_io.write_results(records), args.out)
    print(f"throughput={res.throughput:.4f} goals/s completed={res.completed()} "
          f"valid={rep.ok}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_validate(args) -> int:
    world = load_map(args.map)
    try:
        recs = bench_io.read_results(_read(args.plans))
        checked = []
        for rec in recs:
            if "plans" not in rec:
                continue
            plans = bench_io.plans_from_record(rec, world)
            checked.append((rec, validate(plans, world, KinodynamicLimits(),
                                          horizon=rec.get("horizon"))))
    except (ValueError, KeyError, TypeError, IndexError) as e:
        print(f"corrupted plan file: {e}", file=sys.stderr)
        return EXIT_USAGE
    if not checked:
        print("no plans found", file=sys.stderr)
        return EXIT_USAGE
    ok = True
    for rec, rep in checked:
        name = rec.get("instance", rec.get("type", "?"))
        print(json.dumps({"instance": name, **rep.to_dict()}, sort_keys=True))
        ok &= rep.ok
    return EXIT_OK if ok else EXIT_FAIL


SUITE_COLUMNS = ("map", "scen", "agents", "level1", "sps", "pe", "cutoff")


def read_suite(path: str) -> list[dict]:
    text = _read(path).decode("utf-8")
    rows = list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))
    if not rows:
        raise UsageError("empty suite")
    missing = set(SUITE_COLUMNS) - set(rows[0])
    if missing:
        raise UsageError(f"suite is missing columns {sorted(missing)}")
    base = Path(path).parent
    for r in rows:
        for k in ("map", "scen"):
            if not Path(r[k]).is_absolute() and (base / r[k]).exists():
                r[k] = str(base / r[k])
    return rows


def _bench_row(job):
    row, timing = job
    world = load_map(row["map"])
    entries = bench_io.parse_scenario(_read(row["scen"]), world)
    cfg = PlannerConfig(level1=row["level1"], sps=row["sps"], partial_expansion=row["pe"] == "on",
                        cutoff=float(row["cutoff"]), seed=int(row.get("seed") or 0))
    return solve_one(world, entries, int(row["agents"]), cfg,
                     f"{Path(row['scen']).name}:{row['agents']}", timing)


def aggregate(records: list[dict]) -> list[dict]:
    groups: dict = {}
    for r in records:
        c = r["config"]
        key = (r["map"], c["level1"], c["sps"], c["partial_expansion"], r["agents"])
        groups.setdefault(key, []).append(r)
    out = []
    for (m, l1, sps, pe, n), rs in sorted(groups.items(), key=lambda kv: tuple(map(str, kv[0]))):
        row = {"map": m, "level1": l1, "sps": sps, "pe": pe, "agents": n, "runs": len(rs),
               "success_rate": sum(r["success"] for r in rs) / len(rs)}
        solved = [r for r in rs if r["success"]]
        if solved:
            row["mean_soc"] = statistics.fmean(r["soc"] for r in solved)
        if all("runtime" in r for r in rs):
            for k in ("total", "level1", "level2", "level3"):
                row[f"mean_{k}"] = statistics.fmean(r["runtime"][k] for r in rs)
        out.append(row)
    return out


def cmd_bench(args) -> int:
    rows = read_suite(args.suite)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    workers = int(os.environ.get("MASS_WORKERS", "1") or 1)
    jobs = [(r, not args.no_timing) for r in rows]
    if workers > 1:
        from multiprocessing import Pool
        with Pool(workers) as pool:
            records = pool.map(_bench_row, jobs)
    else:
        records = [_bench_row(j) for j in jobs]
    agg = aggregate(records)
    (outdir / "results.jsonl").write_bytes(bench_io.write_results(records))
    (outdir / "aggregate.jsonl").write_bytes(bench_io.write_results(agg))
    cols = ["map", "level1", "sps", "pe", "agents", "runs", "success_rate", "mean_total",
            "mean_level1", "mean_level2", "mean_level3"]
    print("\t".join(cols))
    for a in agg:
        print("\t".join(f"{a[c]:.4g}" if isinstance(a.get(c), float) else str(a.get(c, "-"))
                        for c in cols))
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mass", description="Kinodynamic multi-agent motion planning")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="single-shot MAPF instance")
    s.add_argument("--map", required=True)
    s.add_argument("--scen", required=True)
    s.add_argument("--agents", type=int, required=True)
    s.add_argument("--level1", choices=["pp", "pbs"], default="pbs")
    s.add_argument("--sps", choices=["bas", "bcs"], default="bas")
    s.add_argument("--pe", choices=["on", "off"], default="on")
    s.add_argument("--cutoff", type=float, default=60.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    s.set_defaults(func=cmd_solve)

    l = sub.add_parser("lifelong", help="rolling-horizon warehouse run")
    l.add_argument("--map", required=True)
    l.add_argument("--annot", required=True)
    l.add_argument("--agents", type=int, required=True)
    l.add_argument("--tw", type=float, default=20.0)
    l.add_argument("--th", type=float, default=10.0)
    l.add_argument("--duration", type=float, default=300.0)
    l.add_argument("--sps", choices=["bas", "bcs"], default="bas")
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--out")
    l.set_defaults(func=cmd_lifelong)

    v = sub.add_parser("validate", help="check plans stored in a results file")
    v.add_argument("--plans", required=True)
    v.add_argument("--map", required=True)
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run a CSV suite of instances")
    b.add_argument("--suite", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--no-timing", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:  # malformed map / scenario / annotation
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
