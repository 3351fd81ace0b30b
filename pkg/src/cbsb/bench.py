"""Benchmark harness: run solvers over scenario files and persist the records."""
from __future__ import annotations

import csv
import json
import logging
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Iterable, Sequence

from .core import AgentTask, GridMap, validate_plan
from .ecbs import ecbs_solve
from .movingai import read_map, read_scenario, tasks_from_scenario
from .solver import SOLVED, SolverConfig, SolveResult, solve

log = logging.getLogger(__name__)

SOLVERS = ("cbs", "cbsb", "cbsb-bp", "ecbs")

CSV_COLUMNS = (
    "map", "scenario", "solver", "agents", "w", "status", "cost", "lower_bound",
    "runtime_seconds", "nodes_generated", "nodes_expanded", "low_level_expansions",
)

PLOT_THRESHOLD = 0.75


def run_solver(name: str, grid: GridMap, tasks: Sequence[AgentTask], w, time_limit: float,
               node_limit: int = 1_000_000) -> SolveResult:
    """Dispatch on solver name; ``cbs`` is CBSB with w = 1."""
    if name == "cbs":
        return solve(grid, tasks, SolverConfig(w=1, time_limit=time_limit, node_limit=node_limit))
    if name in ("cbsb", "cbsb-bp"):
        cfg = SolverConfig(w=w, bypass=name == "cbsb-bp", time_limit=time_limit, node_limit=node_limit)
        return solve(grid, tasks, cfg)
    if name == "ecbs":
        return ecbs_solve(grid, tasks, SolverConfig(w=w, time_limit=time_limit, node_limit=node_limit))
    raise ValueError(f"unknown solver {name!r}; expected one of {', '.join(SOLVERS)}")


@dataclass
class RunRecord:
    map: str
    scenario: str
    solver: str
    agents: int
    w: float
    status: str
    cost: int | None
    lower_bound: float | None
    runtime_seconds: float
    nodes_generated: int
    nodes_expanded: int
    low_level_expansions: int
    paths: list | None = field(default=None, repr=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


class ValidationFailure(RuntimeError):
    pass


def record_from(result: SolveResult, map_name, scen_name, solver, m, w) -> RunRecord:
    st = result.stats
    return RunRecord(
        map=map_name, scenario=scen_name, solver=solver, agents=m, w=float(w),
        status=result.status, cost=result.cost,
        lower_bound=None if st.lower_bound is None else float(st.lower_bound),
        runtime_seconds=round(result.runtime, 6),
        nodes_generated=st.generated, nodes_expanded=st.expanded,
        low_level_expansions=st.low_level_expansions,
        paths=[[list(v) for v in p] for p in result.paths] if result.solved else None,
    )


def run_benchmark(maps: Sequence, scenarios: dict, solvers: Sequence[str], ws: Sequence, agent_counts: Sequence[int],
                  time_limit: float, progress: Callable[[RunRecord], None] | None = None) -> list[RunRecord]:
    """Run every (map, scenario, solver, w, m) cell once with fresh solver state.

    ``maps`` are map file paths; ``scenarios[map_path]`` lists that map's scen
    files. Every solved plan is re-validated; a failure raises ValidationFailure.
    """
    records = []
    for map_path in maps:
        map_path = FsPath(map_path)
        grid = read_map(map_path)
        for scen_path in scenarios[map_path] if map_path in scenarios else scenarios[str(map_path)]:
            scen_path = FsPath(scen_path)
            entries = read_scenario(scen_path, grid)
            for m in agent_counts:
                tasks = tasks_from_scenario(entries, m)
                for solver in solvers:
                    for w in ([1] if solver == "cbs" else ws):
                        result = run_solver(solver, grid, tasks, w, time_limit)
                        if result.status == SOLVED:
                            report = validate_plan(grid, tasks, result.paths)
                            if not report.ok:
                                raise ValidationFailure(
                                    f"{solver} w={w} on {scen_path.name} m={m}:\n{report.summary()}"
                                )
                        rec = record_from(result, map_path.stem, scen_path.stem, solver, m, w)
                        log.info("%s %s %s m=%d w=%s -> %s in %.2fs", rec.map, rec.scenario, solver, m, w,
                                 rec.status, rec.runtime_seconds)
                        if progress:
                            progress(rec)
                        records.append(rec)
    return records


@dataclass
class CellSummary:
    map: str
    solver: str
    agents: int
    w: float
    runs: int
    solved: int
    success_ratio: float
    mean_runtime: float | None
    mean_cost: float | None
    plottable: bool


def summarize(records: Iterable[RunRecord]) -> list[CellSummary]:
    """Per (map, solver, m, w) cell: success ratio, mean runtime and cost over solved runs."""
    cells: dict[tuple, list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.map, r.solver, r.agents, r.w), []).append(r)
    out = []
    for (map_name, solver, m, w), runs in cells.items():
        done = [r for r in runs if r.status == SOLVED]
        ratio = len(done) / len(runs)
        out.append(CellSummary(
            map_name, solver, m, w, len(runs), len(done), ratio,
            statistics.fmean(r.runtime_seconds for r in done) if done else None,
            statistics.fmean(r.cost for r in done) if done else None,
            ratio > PLOT_THRESHOLD,
        ))
    return out


def write_results(records: Sequence[RunRecord], csv_path, json_path=None) -> None:
    """CSV in ``CSV_COLUMNS`` order plus JSON with the same fields and solved plans."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(r.row())
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump([asdict(r) for r in records], fh, indent=1)
            fh.write("\n")


def plan_to_json(paths, cost=None, status=SOLVED, **extra) -> dict:
    """Plan file schema: {"status", "cost", "paths": [[[row, col], ...], ...], ...extra}."""
    doc = {"status": status, "cost": cost, "paths": None if paths is None else [[list(v) for v in p] for p in paths]}
    doc.update(extra)
    return doc


def plan_from_json(doc: dict) -> list[list[tuple[int, int]]]:
    return [[tuple(v) for v in p] for p in doc["paths"]]
