"""Brute-force references for testing: joint-space A*, the Y(B) path selector
by exhaustive tabulation, and plain constrained shortest paths.

Nothing here reuses the solver's search code; conflict counts are computed
straight from the other agents' paths.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .core import AgentTask, Constraint, GridMap, Location, Path

MAX_JOINT_AGENTS = 4
MAX_JOINT_CELLS = 36


class LimitExceeded(Exception):
    pass


class CapTooSmall(Exception):
    """The enumeration cap is below the horizon needed to certify the answer."""


def _split(constraints: Iterable[Constraint]):
    vertex, edge = set(), set()
    last_at = {}
    latest = 0
    for c in constraints:
        if c.kind == "vertex":
            vertex.add((c.locations[0], c.timestep))
            last_at[c.locations[0]] = max(last_at.get(c.locations[0], -1), c.timestep)
        else:
            edge.add((c.locations[0], c.locations[1], c.timestep))
        latest = max(latest, c.timestep)
    return vertex, edge, last_at, latest


def _at(path: Path, t: int) -> Location:
    return path[t] if t < len(path) else path[-1]


def step_conflicts(others: Sequence[Path], u: Location, v: Location, t: int) -> int:
    """Other agents that a move u->v arriving at ``t`` collides with."""
    n = 0
    for p in others:
        here = _at(p, t)
        if here == v:
            n += 1
        elif u != v and t > 0 and here == u and _at(p, t - 1) == v:
            n += 1
    return n


def parked_conflicts(others: Sequence[Path], goal: Location, T: int) -> int:
    """Conflicts from staying on ``goal`` after ``T`` until every other path has ended."""
    end = max((len(p) - 1 for p in others), default=0)
    return sum(1 for t in range(T + 1, end + 1) for p in others if _at(p, t) == goal)


def path_conflicts(path: Path, others: Sequence[Path]) -> int:
    n = step_conflicts(others, path[0], path[0], 0)
    for t in range(1, len(path)):
        n += step_conflicts(others, path[t - 1], path[t], t)
    return n + parked_conflicts(others, path[-1], len(path) - 1)


def y_key(length: int, conflicts: int, budget) -> tuple:
    """Y(B) preference on complete paths: conflict-free within budget, then
    within budget by conflicts, then over budget by length."""
    if length > budget:
        return (2, length, conflicts)
    if conflicts == 0:
        return (0, length, 0)
    return (1, conflicts, length)


def required_cap(grid: GridMap, constraints: Iterable[Constraint], others: Sequence[Path]) -> int:
    _, _, _, latest = _split(constraints)
    end = max((len(p) - 1 for p in others), default=0)
    return grid.num_free + latest + end


@dataclass
class YChoice:
    path: Path
    length: int
    conflicts: int
    flag: int


def enumerate_Y(grid: GridMap, task: AgentTask, constraints: Sequence[Constraint], others: Sequence[Path],
                budget, cap: int | None = None, strict: bool = True) -> YChoice | None:
    """Best path under the Y(B) order among all constraint-satisfying paths of length <= cap.

    Tabulates, for every (cell, timestep), the fewest conflicts of any path
    reaching it; every complete path's score is then read off the goal column.
    Raises CapTooSmall if ``cap`` is below the certified horizon, unless
    ``strict`` is off (used to compare against literal enumeration).
    """
    need = required_cap(grid, constraints, others)
    if cap is None:
        cap = need
    elif cap < need and strict:
        raise CapTooSmall(f"cap {cap} < required {need}")
    vertex, edge, last_at, _ = _split(constraints)
    goal = task.target
    if (task.start, 0) in vertex:
        return None

    best = {task.start: step_conflicts(others, task.start, task.start, 0)}
    layers = [best]
    parents: list[dict] = [{}]
    candidates = []
    for T in range(cap + 1):
        if T:
            nxt, par = {}, {}
            for u, c in layers[-1].items():
                for v in grid.neighbors(u):
                    if (v, T) in vertex or (u, v, T) in edge:
                        continue
                    nc = c + step_conflicts(others, u, v, T)
                    if v not in nxt or nc < nxt[v]:
                        nxt[v] = nc
                        par[v] = u
            layers.append(nxt)
            parents.append(par)
        if goal in layers[T] and T > last_at.get(goal, -1):
            total = layers[T][goal] + parked_conflicts(others, goal, T)
            candidates.append((y_key(T, total, budget), T, total))
    if not candidates:
        return None
    key, T, total = min(candidates)
    path = [goal]
    for t in range(T, 0, -1):
        path.append(parents[t][path[-1]])
    path.reverse()
    return YChoice(path, T, total, key[0])


def enumerate_paths(grid: GridMap, task: AgentTask, constraints: Sequence[Constraint], cap: int) -> Iterator[Path]:
    """Every constraint-satisfying path of length <= cap, by depth-first listing."""
    vertex, edge, last_at, _ = _split(constraints)
    goal = task.target
    if (task.start, 0) in vertex:
        return
    path = [task.start]

    def rec():
        T = len(path) - 1
        if path[-1] == goal and T > last_at.get(goal, -1):
            yield list(path)
        if T == cap:
            return
        u = path[-1]
        for v in grid.neighbors(u):
            if (v, T + 1) in vertex or (u, v, T + 1) in edge:
                continue
            path.append(v)
            yield from rec()
            path.pop()

    yield from rec()


def constrained_shortest_length(grid: GridMap, task: AgentTask, constraints: Sequence[Constraint],
                                cap: int | None = None) -> int | None:
    """Length of the shortest constraint-satisfying path, by BFS over (cell, timestep)."""
    vertex, edge, last_at, latest = _split(constraints)
    if cap is None:
        cap = grid.num_free + latest
    goal = task.target
    if (task.start, 0) in vertex:
        return None
    frontier = {task.start}
    for T in range(cap + 1):
        if goal in frontier and T > last_at.get(goal, -1):
            return T
        nxt = set()
        for u in frontier:
            for v in grid.neighbors(u):
                if (v, T + 1) not in vertex and (u, v, T + 1) not in edge:
                    nxt.add(v)
        frontier = nxt
        if not frontier:
            return None
    return None


def _bfs(grid: GridMap, source: Location) -> dict:
    dist = {source: 0}
    q = deque([source])
    while q:
        u = q.popleft()
        for v in grid.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


@dataclass
class JointResult:
    cost: int | None
    paths: list[Path] | None
    expanded: int

    @property
    def solved(self) -> bool:
        return self.cost is not None


def joint_astar(grid: GridMap, tasks: Sequence[AgentTask], max_agents: int = MAX_JOINT_AGENTS,
                max_cells: int = MAX_JOINT_CELLS, max_expansions: int = 5_000_000) -> JointResult:
    """Minimum-flowtime plan by A* over joint configurations.

    A state is (positions, finished); an agent sitting on its target may
    declare itself finished at no cost and never moves again. Each unfinished
    agent pays one per timestep. Returns cost None when the finite joint space
    is exhausted without reaching the all-finished state.
    """
    m = len(tasks)
    if m > max_agents or grid.num_free > max_cells:
        raise LimitExceeded(f"joint search limited to {max_agents} agents and {max_cells} cells")
    if m == 0:
        return JointResult(0, [], 0)
    dists = [_bfs(grid, t.target) for t in tasks]
    if any(t.start not in d for t, d in zip(tasks, dists)):
        return JointResult(None, None, 0)
    goals = tuple(t.target for t in tasks)
    all_done = (1 << m) - 1

    def h(pos, done):
        return sum(dists[i][pos[i]] for i in range(m) if not done >> i & 1)

    start = (tuple(t.start for t in tasks), 0)
    g = {start: 0}
    parent = {start: None}
    counter = itertools.count()
    heap = [(h(*start), 0, next(counter), start)]
    expanded = 0
    while heap:
        _, gs, _, state = heapq.heappop(heap)
        if gs > g[state]:
            continue
        pos, done = state
        if done == all_done:
            return JointResult(gs, _joint_paths(parent, state, m), expanded)
        expanded += 1
        if expanded > max_expansions:
            raise LimitExceeded("joint search expansion limit")
        succ = []
        for i in range(m):
            if not done >> i & 1 and pos[i] == goals[i]:
                succ.append(((pos, done | 1 << i), 0))
        active = [i for i in range(m) if not done >> i & 1]
        step = len(active)
        if step:
            for new in _joint_steps(grid, pos, active, dists):
                succ.append(((new, done), step))
        for nxt, cost in succ:
            ng = gs + cost
            if ng < g.get(nxt, math.inf):
                g[nxt] = ng
                parent[nxt] = (state, cost > 0)
                heapq.heappush(heap, (ng + h(*nxt), ng, next(counter), nxt))
    return JointResult(None, None, expanded)


def _joint_steps(grid, pos, active, dists):
    fixed = {pos[i] for i in range(len(pos)) if i not in active}
    options = []
    for i in active:
        options.append([v for v in grid.neighbors(pos[i]) if v in dists[i] and v not in fixed])
    for combo in itertools.product(*options):
        if len(set(combo)) < len(combo):
            continue
        new = list(pos)
        for i, v in zip(active, combo):
            new[i] = v
        swapped = False
        for a, b in itertools.combinations(active, 2):
            if new[a] == pos[b] and new[b] == pos[a] and pos[a] != pos[b]:
                swapped = True
                break
        if not swapped:
            yield tuple(new)


def _joint_paths(parent, state, m) -> list[Path]:
    trail = []
    node = state
    while node is not None:
        trail.append(node)
        link = parent[node]
        node = None if link is None else link[0]
    trail.reverse()
    paths: list[Path] = [[] for _ in range(m)]
    prev_pos = None
    for pos, done in trail:
        if pos is prev_pos:
            continue  # finishing step, no time passes
        for i in range(m):
            paths[i].append(pos[i])
        prev_pos = pos
    # each agent's path ends on its final arrival at the target
    for i in range(m):
        p = paths[i]
        while len(p) > 1 and p[-1] == p[-2]:
            p.pop()
    return paths
