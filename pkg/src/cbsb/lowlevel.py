"""Single-agent search on the time-expanded grid.

``find_path`` is the budgeted class-ordered A*: among constraint-satisfying
paths it prefers, in order,

0. conflict-free paths no longer than the budget (shortest first),
1. other paths no longer than the budget (fewest conflicts, then shortest),
2. everything else (shortest, then fewest conflicts).

Partial paths are ranked with ``f = t + h`` in place of the final length, so
the class of a label never decreases along a branch.
"""
from __future__ import annotations

import heapq
import math
import time
from bisect import bisect_right
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import AgentTask, Constraint, GridMap, Location, Path

HeuristicTable = dict  # Location -> exact distance to the target; unreachable cells absent

CHECK_EVERY = 10_000


class SearchTimeout(Exception):
    """Raised when a low-level search runs past its deadline."""


def build_heuristic(grid: GridMap, target: Location) -> HeuristicTable:
    """Exact distances to ``target`` by backward breadth-first search."""
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        d = dist[v] + 1
        for u in grid.neighbors(v):
            if u not in dist:
                dist[u] = d
                queue.append(u)
    return dist


class ConflictAvoidanceTable:
    """Counts how many of a fixed set of paths a single move would collide with."""

    def __init__(self, paths: Iterable[Path] = ()):
        self.occupancy: dict[tuple[Location, int], int] = defaultdict(int)
        self.moves: dict[tuple[Location, Location, int], int] = defaultdict(int)
        self.parked: dict[Location, list[int]] = defaultdict(list)
        self._times: dict[Location, list[int]] = defaultdict(list)
        self.horizon = 0
        self.num_paths = 0
        for p in paths:
            self.add(p)

    def add(self, path: Path) -> None:
        end = len(path) - 1
        occ, moves, times = self.occupancy, self.moves, self._times
        for t in range(end):
            v = path[t]
            occ[(v, t)] += 1
            times[v].append(t)
            if t and path[t - 1] != v:
                moves[(path[t - 1], v, t)] += 1
        if end and path[end - 1] != path[end]:
            moves[(path[end - 1], path[end], end)] += 1
        self.parked[path[end]].append(end)
        self.parked[path[end]].sort()
        for v in set(path[:end]):
            times[v].sort()
        self.horizon = max(self.horizon, end)
        self.num_paths += 1

    def __bool__(self) -> bool:
        return self.num_paths > 0

    def vertex(self, loc: Location, t: int) -> int:
        n = self.occupancy.get((loc, t), 0)
        arrivals = self.parked.get(loc)
        if arrivals:
            n += bisect_right(arrivals, t)
        return n

    def move(self, u: Location, v: Location, t: int) -> int:
        """Conflicts incurred by moving u->v, arriving at ``t``."""
        n = self.vertex(v, t)
        if u != v:
            n += self.moves.get((v, u, t), 0)
        return n

    def future(self, loc: Location, t: int) -> int:
        """Conflicts from parking on ``loc`` for every timestep after ``t`` up to the horizon."""
        n = 0
        times = self._times.get(loc)
        if times:
            n += len(times) - bisect_right(times, t)
        for a in self.parked.get(loc, ()):
            lo = max(a, t + 1)
            if lo <= self.horizon:
                n += self.horizon - lo + 1
        return n


def build_cat(paths: Sequence[Path | None], excluded_agent: int | None = None) -> ConflictAvoidanceTable:
    return ConflictAvoidanceTable(
        p for i, p in enumerate(paths) if i != excluded_agent and p is not None
    )


class ConstraintTable:
    """Per-agent lookup of vertex and edge prohibitions."""

    def __init__(self, constraints: Iterable[Constraint] = ()):
        self.vertex: set[tuple[Location, int]] = set()
        self.edge: set[tuple[Location, Location, int]] = set()
        self.latest = 0
        self._target_latest: dict[Location, int] = {}
        for c in constraints:
            self.add(c)

    def add(self, c: Constraint) -> None:
        if c.kind == "vertex":
            loc = c.locations[0]
            self.vertex.add((loc, c.timestep))
            if c.timestep > self._target_latest.get(loc, -1):
                self._target_latest[loc] = c.timestep
        elif c.kind == "edge":
            u, v = c.locations
            self.edge.add((u, v, c.timestep))
        else:
            raise ValueError(f"unknown constraint kind {c.kind!r}")
        self.latest = max(self.latest, c.timestep)

    def last_vertex_time(self, loc: Location) -> int:
        """Latest timestep at which ``loc`` is forbidden, or -1."""
        return self._target_latest.get(loc, -1)

    def allows_path(self, path: Path) -> bool:
        for t, v in enumerate(path):
            if (v, t) in self.vertex:
                return False
            if t and (path[t - 1], v, t) in self.edge:
                return False
        return self.last_vertex_time(path[-1]) < len(path)


def budget_floor(budget) -> float | int:
    """Largest integer length that fits in ``budget`` (or ``inf``)."""
    if budget == math.inf:
        return math.inf
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    return math.floor(Fraction(budget) if isinstance(budget, float) else budget)


def search_horizon(grid: GridMap, constraints: ConstraintTable, cat: ConflictAvoidanceTable) -> int:
    return grid.num_free + constraints.latest + cat.horizon


def path_class(length: int, conflicts: int, budget) -> int:
    if length > budget:
        return 2
    return 1 if conflicts else 0


def order_key(length: int, conflicts: int, budget) -> tuple:
    """Total order on complete paths used by the budgeted search and its oracles."""
    flag = path_class(length, conflicts, budget)
    if flag == 0:
        return (0, length, 0)
    if flag == 1:
        return (1, conflicts, length)
    return (2, length, conflicts)


@dataclass
class SearchResult:
    path: Path
    conflicts: int
    flag: int
    expanded: int

    @property
    def length(self) -> int:
        return len(self.path) - 1


def find_path(
    grid: GridMap,
    task: AgentTask,
    budget,
    constraints: Iterable[Constraint] | ConstraintTable = (),
    cat: ConflictAvoidanceTable | None = None,
    h: Mapping[Location, int] | None = None,
    *,
    deadline: float | None = None,
) -> SearchResult | None:
    """Budgeted class-ordered A* from ``task.start`` to ``task.target``.

    Returns None when no constraint-satisfying path exists within the search
    horizon. ``budget`` may be an int, Fraction, float or ``math.inf``.
    """
    if not isinstance(constraints, ConstraintTable):
        constraints = ConstraintTable(constraints)
    if cat is None:
        cat = ConflictAvoidanceTable()
    if h is None:
        h = build_heuristic(grid, task.target)
    bound = budget_floor(budget)
    start, goal = task.start, task.target
    if start not in h or (start, 0) in constraints.vertex:
        return None

    horizon = search_horizon(grid, constraints, cat)
    earliest_finish = constraints.last_vertex_time(goal) + 1
    vertex_forbidden = constraints.vertex
    edge_forbidden = constraints.edge
    adj = grid._adj
    use_cat = bool(cat)
    cat_move = cat.move

    c0 = cat.vertex(start, 0) if use_cat else 0
    heap: list = []
    seq = 0

    def key_of(f, c):
        if f > bound:
            return 2, f, c
        if c:
            return 1, c, f
        return 0, f, 0

    k0, k1, k2 = key_of(h[start], c0)
    # entry: (flag, k1, k2, -t, seq, loc, t, c, parent_loc, terminal)
    heap.append((k0, k1, k2, 0, 0, start, 0, c0, None, False))
    best_c: dict[tuple[Location, int], int] = {(start, 0): c0}
    parent: dict[tuple[Location, int], Location | None] = {}
    expanded = 0

    while heap:
        _, _, _, _, _, loc, t, c, ploc, terminal = heapq.heappop(heap)
        if terminal:
            path = [loc]
            node = (loc, t)
            while node[1] > 0:
                prev = parent[node]
                node = (prev, node[1] - 1)
                path.append(prev)
            path.reverse()
            return SearchResult(path, c, path_class(t, c, bound), expanded)
        state = (loc, t)
        if state in parent:
            continue
        parent[state] = ploc
        expanded += 1
        if deadline is not None and expanded % CHECK_EVERY == 0 and time.perf_counter() > deadline:
            raise SearchTimeout

        if loc == goal and t >= earliest_finish:
            cf = c + cat.future(goal, t) if use_cat else c
            seq += 1
            heapq.heappush(heap, (*key_of(t, cf), -t, seq, loc, t, cf, ploc, True))

        nt = t + 1
        if nt > horizon:
            continue
        for nxt in adj[loc]:
            hn = h.get(nxt)
            if hn is None:
                continue
            if (nxt, nt) in vertex_forbidden or (loc, nxt, nt) in edge_forbidden:
                continue
            ns = (nxt, nt)
            if ns in parent:
                continue
            nc = c + cat_move(loc, nxt, nt) if use_cat else c
            old = best_c.get(ns)
            if old is not None and old <= nc:
                continue
            best_c[ns] = nc
            seq += 1
            heapq.heappush(heap, (*key_of(nt + hn, nc), -nt, seq, nxt, nt, nc, loc, False))
    return None


def count_path_conflicts(path: Path, cat: ConflictAvoidanceTable) -> int:
    """Conflicts of a complete path against ``cat``, parking included."""
    c = cat.vertex(path[0], 0)
    for t in range(1, len(path)):
        c += cat.move(path[t - 1], path[t], t)
    return c + cat.future(path[-1], len(path) - 1)
