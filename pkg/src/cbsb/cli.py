"""Command-line entry point: ``cbsb {solve,bench,validate,oracle}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path as FsPath

from .bench import SOLVERS, plan_from_json, plan_to_json, run_benchmark, run_solver, summarize, write_results
from .core import AgentTask, validate_plan
from .movingai import OutOfBounds, ParseError, read_instance, read_map
from .oracles import LimitExceeded, joint_astar
from .solver import LIMIT_EXCEEDED, NO_SOLUTION, SOLVED, TIMEOUT

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_NO_SOLUTION, EXIT_LIMIT, EXIT_INPUT = 0, 1, 2, 3
STATUS_EXIT = {SOLVED: EXIT_OK, NO_SOLUTION: EXIT_NO_SOLUTION, TIMEOUT: EXIT_LIMIT, LIMIT_EXCEEDED: EXIT_LIMIT}


class InputError(Exception):
    pass


def _instance(args):
    try:
        return read_instance(args.map, args.scen, args.agents)
    except (OSError, ParseError, OutOfBounds, ValueError) as exc:
        raise InputError(str(exc)) from exc


def cmd_solve(args) -> int:
    grid, tasks = _instance(args)
    result = run_solver(args.solver, grid, tasks, args.w, args.time_limit)
    st = result.stats
    print(f"{result.status} cost={result.cost} runtime={result.runtime:.3f}s "
          f"generated={st.generated} expanded={st.expanded}")
    if args.out:
        doc = plan_to_json(result.paths, result.cost, result.status, solver=args.solver, w=float(args.w),
                           runtime_seconds=result.runtime, stats=st.as_dict(),
                           tasks=[{"start": list(t.start), "target": list(t.target)} for t in tasks])
        FsPath(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    return STATUS_EXIT[result.status]


def cmd_oracle(args) -> int:
    grid, tasks = _instance(args)
    try:
        res = joint_astar(grid, tasks)
    except LimitExceeded as exc:
        print(f"{LIMIT_EXCEEDED}: {exc}")
        return EXIT_LIMIT
    if not res.solved:
        print(NO_SOLUTION)
        return EXIT_NO_SOLUTION
    print(f"{SOLVED} cost={res.cost}")
    for i, p in enumerate(res.paths):
        print(f"agent {i}: {' '.join(f'({r},{c})' for r, c in p)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        grid = read_map(args.map)
        doc = json.loads(FsPath(args.plan).read_text())
        paths = plan_from_json(doc)
        tasks = doc.get("tasks")
    except (OSError, ParseError, ValueError, KeyError, TypeError) as exc:
        raise InputError(str(exc)) from exc

    if tasks is None:
        tasks = [AgentTask(i, p[0], p[-1]) for i, p in enumerate(paths)]
    else:
        tasks = [AgentTask(i, tuple(t["start"]), tuple(t["target"])) for i, t in enumerate(tasks)]
    report = validate_plan(grid, tasks, paths)
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_NO_SOLUTION


def cmd_bench(args) -> int:
    try:
        with open(args.config, "rb") as fh:
            cfg = tomllib.load(fh)
        base = FsPath(args.config).parent
        maps = [base / m for m in cfg["maps"]]
        scens = {}
        for m in maps:
            listed = cfg.get("scenarios", {}).get(m.stem)
            if listed is None:
                listed = sorted(p.name for p in m.parent.glob(f"{m.stem}-*.scen"))
            scens[m] = [m.parent / s for s in listed]
        solvers = cfg.get("solvers", ["cbsb-bp"])
        for s in solvers:
            if s not in SOLVERS:
                raise ValueError(f"unknown solver {s!r}")
        ws = cfg.get("w", [1.2])
        agents = cfg.get("agents", [10])
        time_limit = float(cfg.get("time_limit", 10.0))
    except (OSError, KeyError, ValueError, tomllib.TOMLDecodeError) as exc:
        raise InputError(str(exc)) from exc
    out = FsPath(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        records = run_benchmark(maps, scens, solvers, ws, agents, time_limit)
    except (ParseError, OutOfBounds, ValueError) as exc:
        raise InputError(str(exc)) from exc
    write_results(records, out / "results.csv", out / "results.json")
    for s in summarize(records):
        rt = "-" if s.mean_runtime is None else f"{s.mean_runtime:.3f}s"
        print(f"{s.map} {s.solver} m={s.agents} w={s.w}: {s.solved}/{s.runs} solved, mean runtime {rt}"
              f"{'' if s.plottable else ' (below plotting threshold)'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbsb", description="Bounded-suboptimal MAPF with per-agent budgets.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one MovingAI instance")
    p.add_argument("--map", required=True)
    p.add_argument("--scen", required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--solver", choices=SOLVERS, default="cbsb-bp")
    p.add_argument("--w", type=float, default=1.2)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark sweep from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default="bench-results")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a plan JSON against a map")
    p.add_argument("--map", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="optimal plan by joint-space A* (tiny instances only)")
    p.add_argument("--map", required=True)
    p.add_argument("--scen", required=True)
    p.add_argument("--agents", type=int, required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
