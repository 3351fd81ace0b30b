"""Plain ECBS: focal search with the same factor w at both levels.

Used as a comparison baseline. The low level returns a path whose length is
within ``w`` of the smallest f in its open list, together with that f as a
lower bound; the high level keeps FOCAL = {N : cost(N) <= w * min LB}.
"""
from __future__ import annotations

import heapq
import itertools
import time
from fractions import Fraction
from typing import Sequence

from .core import (
    AgentTask,
    Conflict,
    Constraint,
    GridMap,
    Path,
    check_tasks,
    detect_agent_conflicts,
    detect_conflicts,
    plan_cost,
    validate_plan,
)
from .lowlevel import (
    CHECK_EVERY,
    ConflictAvoidanceTable,
    ConstraintTable,
    SearchTimeout,
    build_cat,
    build_heuristic,
    search_horizon,
)
from .solver import (
    LIMIT_EXCEEDED,
    NO_SOLUTION,
    SOLVED,
    TIMEOUT,
    HighLevelQueues,
    LimitExceeded,
    SolverConfig,
    SolveResult,
    Stats,
    as_fraction,
    certify_unsolvable,
    choose_conflict,
    resolve_conflict,
)


def focal_path(grid: GridMap, task: AgentTask, w: Fraction, constraints: ConstraintTable,
               cat: ConflictAvoidanceTable, h: dict, deadline: float | None = None):
    """Focal A* on the time-expanded grid; returns (path, lower_bound, expanded) or None."""
    start, goal = task.start, task.target
    if start not in h or (start, 0) in constraints.vertex:
        return None
    horizon = search_horizon(grid, constraints, cat)
    earliest_finish = constraints.last_vertex_time(goal) + 1
    seq = itertools.count()

    # node: [f, c, t, loc, parent, closed]
    root = [h[start], cat.vertex(start, 0), 0, start, None, False]
    open_f = [(root[0], next(seq), root)]
    pending: list = []
    focal = [(root[1], root[0], 0, next(seq), root)]
    best_c = {(start, 0): root[1]}
    f_min = root[0]
    expanded = 0

    while focal or pending:
        while open_f and open_f[0][2][5]:
            heapq.heappop(open_f)
        if not open_f:
            return None
        if open_f[0][0] > f_min:
            f_min = open_f[0][0]
            limit = w * f_min
            while pending and pending[0][0] <= limit:
                _, s, node = heapq.heappop(pending)
                if not node[5]:
                    heapq.heappush(focal, (node[1], node[0], -node[2], s, node))
        node = None
        while focal:
            cand = heapq.heappop(focal)[4]
            if not cand[5]:
                node = cand
                break
        if node is None:
            continue
        f, c, t, loc, _, _ = node
        node[5] = True
        expanded += 1
        if deadline is not None and expanded % CHECK_EVERY == 0 and time.perf_counter() > deadline:
            raise SearchTimeout
        if loc == goal and t >= earliest_finish:
            path = []
            while node is not None:
                path.append(node[3])
                node = node[4]
            path.reverse()
            return path, f_min, expanded
        nt = t + 1
        if nt > horizon:
            continue
        limit = w * f_min
        for nxt in grid.neighbors(loc):
            hn = h.get(nxt)
            if hn is None or (nxt, nt) in constraints.vertex or (loc, nxt, nt) in constraints.edge:
                continue
            nc = c + cat.move(loc, nxt, nt)
            old = best_c.get((nxt, nt))
            if old is not None and old <= nc:
                continue
            best_c[(nxt, nt)] = nc
            child = [nt + hn, nc, nt, nxt, node, False]
            s = next(seq)
            heapq.heappush(open_f, (child[0], s, child))
            if child[0] <= limit:
                heapq.heappush(focal, (nc, child[0], -nt, s, child))
            else:
                heapq.heappush(pending, (child[0], s, child))
    return None


class ECBSNode:
    __slots__ = ("constraint", "parent", "paths", "lbs", "conflicts", "cost", "b", "h_c", "in_open", "in_focal")

    def __init__(self, paths, lbs, conflicts, constraint=None, parent=None):
        self.constraint: Constraint | None = constraint
        self.parent = parent
        self.paths: list[Path] = paths
        self.lbs: list[int] = lbs
        self.conflicts: list[Conflict] = conflicts
        self.cost = plan_cost(paths)
        self.b = sum(lbs)  # lower bound on the optimal cost under this node's constraints
        self.h_c = len(conflicts)
        self.in_open = False
        self.in_focal = False

    def constraints_for(self, agent):
        out = []
        node = self
        while node is not None:
            if node.constraint is not None and node.constraint.agent == agent:
                out.append(node.constraint)
            node = node.parent
        return out


def ecbs_solve(grid: GridMap, tasks: Sequence[AgentTask], config: SolverConfig | None = None) -> SolveResult:
    config = config or SolverConfig()
    check_tasks(grid, tasks)
    w = as_fraction(config.w)
    stats = Stats()
    start_time = time.perf_counter()
    deadline = start_time + config.time_limit
    heuristics = [build_heuristic(grid, t.target) for t in tasks]

    def plan(agent, node_paths, table):
        res = focal_path(grid, tasks[agent], w, table, build_cat(node_paths, agent), heuristics[agent], deadline)
        stats.low_level_calls += 1
        if res is not None:
            stats.low_level_expansions += res[2]
        return res

    def finish(status, node=None):
        runtime = time.perf_counter() - start_time
        if node is None:
            return SolveResult(status, runtime=runtime, stats=stats)
        report = validate_plan(grid, tasks, node.paths)
        if not report.ok:
            raise AssertionError(f"ECBS produced an invalid plan:\n{report.summary()}")
        return SolveResult(SOLVED, node.paths, node.cost, runtime, stats)

    try:
        if certify_unsolvable(grid, tasks, config.certify_limit):
            return finish(NO_SOLUTION)
        paths: list = [None] * len(tasks)
        lbs = []
        for i in range(len(tasks)):
            res = plan(i, paths, ConstraintTable())
            if res is None:
                return finish(NO_SOLUTION)
            paths[i] = res[0]
            lbs.append(res[1])
        root = ECBSNode(paths, lbs, detect_conflicts(paths))
        stats.generated = 1
        queues = HighLevelQueues(scale=w)
        queues.push(root)
        while len(queues):
            if time.perf_counter() > deadline:
                return finish(TIMEOUT)
            node = queues.select()
            stats.expanded += 1
            stats.b_min = queues.b_min
            stats.lower_bound = Fraction(queues.b_min)
            if not node.conflicts:
                return finish(SOLVED, node)
            children = []
            for constraint in resolve_conflict(choose_conflict(node)):
                k = constraint.agent
                table = ConstraintTable(node.constraints_for(k))
                table.add(constraint)
                res = plan(k, node.paths, table)
                if res is None:
                    stats.dead_ends += 1
                    continue
                paths = list(node.paths)
                paths[k] = res[0]
                lbs = list(node.lbs)
                # constraints only accumulate, so the parent's bound still holds
                lbs[k] = max(lbs[k], res[1])
                conflicts = [c for c in node.conflicts if k not in c.agents]
                conflicts.extend(detect_agent_conflicts(paths, k))
                conflicts.sort(key=Conflict.sort_key)
                child = ECBSNode(paths, lbs, conflicts, constraint, node)
                stats.generated += 1
                if stats.generated > config.node_limit:
                    raise LimitExceeded
                children.append(child)
            queues.push_all(children)
        return finish(NO_SOLUTION)
    except SearchTimeout:
        return finish(TIMEOUT)
    except LimitExceeded:
        return finish(LIMIT_EXCEEDED)
