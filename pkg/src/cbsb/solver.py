"""Constraint-tree search with per-agent budgets (CBSB) and its bypass variant.

Each CT node carries a budget per agent. The low level is asked for a path no
longer than that budget with as few conflicts as possible; when the returned
path overshoots, it is provably a shortest satisfying path and the budget is
raised to ``w`` times its length. OPEN is ordered by the summed budget ``b``;
FOCAL holds the OPEN nodes whose cost fits under the smallest ``b`` seen so far
and is ordered by conflict count.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import (
    AgentTask,
    Conflict,
    Constraint,
    GridMap,
    Path,
    check_tasks,
    detect_agent_conflicts,
    detect_conflicts,
    edge_constraint,
    plan_cost,
    validate_plan,
    vertex_constraint,
)
from .lowlevel import (
    ConflictAvoidanceTable,
    ConstraintTable,
    SearchTimeout,
    build_cat,
    build_heuristic,
    find_path,
)

log = logging.getLogger(__name__)

SOLVED = "Solved"
NO_SOLUTION = "NoSolution"
TIMEOUT = "Timeout"
LIMIT_EXCEEDED = "LimitExceeded"


class LimitExceeded(Exception):
    pass


def as_fraction(w) -> Fraction:
    """Exact rational for a suboptimality factor; floats go through their decimal repr."""
    if isinstance(w, Fraction):
        return w
    if isinstance(w, float):
        return Fraction(repr(w))
    return Fraction(w)


@dataclass
class SolverConfig:
    w: float | Fraction = 1.0
    bypass: bool = False
    time_limit: float = 60.0
    node_limit: int = 1_000_000
    # largest joint configuration space for which unsolvability is certified up front
    certify_limit: int = 200_000

    def __post_init__(self):
        if as_fraction(self.w) < 1:
            raise ValueError("suboptimality factor w must be >= 1")


@dataclass
class Stats:
    generated: int = 0
    expanded: int = 0
    bypasses: int = 0
    dead_ends: int = 0
    low_level_calls: int = 0
    low_level_expansions: int = 0
    b_min: Fraction | None = None
    lower_bound: Fraction | None = None
    timings: dict = field(default_factory=lambda: {"root": 0.0, "low_level": 0.0, "conflicts": 0.0, "high_level": 0.0})

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "timings"}
        for k in ("b_min", "lower_bound"):
            if d[k] is not None:
                d[k] = float(d[k])
        d.update({f"time_{k}": v for k, v in self.timings.items()})
        return d


@dataclass
class SolveResult:
    status: str
    paths: list[Path] | None = None
    cost: int | None = None
    runtime: float = 0.0
    stats: Stats = field(default_factory=Stats)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


_ids = itertools.count()


class CTNode:
    __slots__ = (
        "constraint", "parent", "paths", "conflicts", "cost", "budgets", "b", "h_c", "depth", "id",
        "in_open", "in_focal",
    )

    def __init__(self, paths, budgets, conflicts, constraint=None, parent=None, b=None):
        self.constraint: Constraint | None = constraint
        self.parent: CTNode | None = parent
        self.paths: list[Path] = paths
        self.budgets: list[Fraction] = budgets
        self.b: Fraction = sum(budgets, Fraction(0)) if b is None else b
        self.conflicts: list[Conflict] = conflicts
        self.cost: int = plan_cost(paths)
        self.h_c: int = len(conflicts)
        self.depth: int = 0 if parent is None else parent.depth + 1
        self.id: int = next(_ids)
        self.in_open = False
        self.in_focal = False

    @property
    def constraints(self) -> list[Constraint]:
        out = []
        node = self
        while node is not None:
            if node.constraint is not None:
                out.append(node.constraint)
            node = node.parent
        out.reverse()
        return out

    def constraints_for(self, agent: int) -> list[Constraint]:
        return [c for c in self.constraints if c.agent == agent]

    def __repr__(self):
        return f"CTNode(id={self.id}, cost={self.cost}, b={self.b}, h_c={self.h_c}, depth={self.depth})"


class HighLevelQueues:
    """OPEN keyed by ``b`` and FOCAL keyed by conflict count, as two lazy heaps.

    A node is admitted to FOCAL when ``cost + h <= scale * b_min``; CBSB uses
    scale 1 and ECBS uses its suboptimality factor over lower bounds.
    """

    def __init__(self, h: Callable[[CTNode], int] | None = None, scale=1):
        self.h = h or (lambda node: 0)
        self.scale = scale
        self.open: list = []
        self.focal: list = []
        self.waiting: list = []  # OPEN nodes not yet admitted to FOCAL, keyed by cost + h
        self.b_min: Fraction | None = None
        self._seq = itertools.count()
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def head_b(self) -> Fraction | None:
        while self.open and not self.open[0][2].in_open:
            heapq.heappop(self.open)
        return self.open[0][2].b if self.open else None

    def _admit(self, node: CTNode, seq: int) -> None:
        node.in_focal = True
        heapq.heappush(self.focal, (node.h_c, node.b, seq, node))

    def push(self, node: CTNode) -> None:
        self.push_all([node])

    def push_all(self, nodes) -> None:
        """Insert nodes into OPEN, then test FOCAL admission against the new head.

        Siblings go in together: testing each against a head that does not yet
        include its sibling can admit a node above the true bound.
        """
        entries = []
        for node in nodes:
            seq = next(self._seq)
            node.in_open = True
            self.size += 1
            heapq.heappush(self.open, (node.b, seq, node))
            entries.append((seq, node))
        if not entries:
            return
        limit = self.scale * self.head_b()
        for seq, node in entries:
            if node.cost + self.h(node) <= limit:
                self._admit(node, seq)
            else:
                heapq.heappush(self.waiting, (node.cost + self.h(node), seq, node))

    def select(self) -> CTNode:
        head = self.head_b()
        if head is None:
            raise IndexError("select from empty OPEN")
        if self.b_min is None or self.b_min < head:
            self.b_min = head
            limit = self.scale * self.b_min
            while self.waiting and self.waiting[0][0] <= limit:
                _, seq, node = heapq.heappop(self.waiting)
                if node.in_open and not node.in_focal:
                    self._admit(node, seq)
        while self.focal:
            node = heapq.heappop(self.focal)[3]
            if node.in_open:
                node.in_open = False
                node.in_focal = False
                self.size -= 1
                return node
        raise RuntimeError("FOCAL is empty although OPEN is not")


def push_node(queues: HighLevelQueues, *nodes: CTNode) -> None:
    queues.push_all(nodes)


def select_node(queues: HighLevelQueues) -> CTNode:
    return queues.select()


def choose_conflict(node: CTNode) -> Conflict:
    """Earliest conflict, ties broken by the smaller agent pair."""
    return min(node.conflicts, key=Conflict.sort_key)


def resolve_conflict(conflict: Conflict) -> tuple[Constraint, Constraint]:
    i, j = conflict.agents
    t = conflict.timestep
    if conflict.kind == "vertex":
        v = conflict.locations[0]
        return vertex_constraint(i, v, t), vertex_constraint(j, v, t)
    u, v = conflict.locations
    return edge_constraint(i, u, v, t), edge_constraint(j, v, u, t)


@dataclass
class Hooks:
    """Optional observers, used by tests to check search invariants."""

    on_select: Callable[[HighLevelQueues, Fraction, CTNode], None] | None = None
    on_generate: Callable[[CTNode], None] | None = None
    on_bypass: Callable[[CTNode, CTNode, Fraction], None] | None = None


class CBSB:
    """One solve over a fixed instance; holds heuristics and counters."""

    def __init__(self, grid: GridMap, tasks: Sequence[AgentTask], config: SolverConfig | None = None,
                 hooks: Hooks | None = None):
        check_tasks(grid, tasks)
        self.grid = grid
        self.tasks = list(tasks)
        self.config = config or SolverConfig()
        self.w = as_fraction(self.config.w)
        self.hooks = hooks or Hooks()
        self.stats = Stats()
        self.heuristics = [build_heuristic(grid, t.target) for t in self.tasks]
        self.deadline: float | None = None

    def shortest_length(self, agent: int) -> int | None:
        return self.heuristics[agent].get(self.tasks[agent].start)

    def _find(self, agent, budget, constraints, cat):
        t0 = time.perf_counter()
        res = find_path(self.grid, self.tasks[agent], budget, constraints, cat,
                        self.heuristics[agent], deadline=self.deadline)
        self.stats.low_level_calls += 1
        self.stats.timings["low_level"] += time.perf_counter() - t0
        if res is not None:
            self.stats.low_level_expansions += res.expanded
        return res

    def generate_root(self) -> CTNode | None:
        m = len(self.tasks)
        paths: list[Path] = []
        budgets: list[Fraction] = []
        cat = ConflictAvoidanceTable()
        for i in range(m):
            f_hat = self.shortest_length(i)
            if f_hat is None:
                return None
            b_i = self.w * f_hat
            res = self._find(i, b_i, (), cat)
            if res is None:
                return None
            if b_i < res.length:
                b_i = self.w * res.length
            paths.append(res.path)
            budgets.append(b_i)
            cat.add(res.path)
        t0 = time.perf_counter()
        conflicts = detect_conflicts(paths)
        self.stats.timings["conflicts"] += time.perf_counter() - t0
        root = CTNode(paths, budgets, conflicts)
        self.stats.generated += 1
        if self.hooks.on_generate:
            self.hooks.on_generate(root)
        return root

    def generate_child(self, parent: CTNode, constraint: Constraint) -> CTNode | None:
        k = constraint.agent
        cat = build_cat(parent.paths, excluded_agent=k)
        table = ConstraintTable(parent.constraints_for(k))
        table.add(constraint)
        b_k = parent.budgets[k]
        res = self._find(k, b_k, table, cat)
        if res is None:
            self.stats.dead_ends += 1
            return None
        budgets = list(parent.budgets)
        b = parent.b
        if b_k < res.length:
            budgets[k] = self.w * res.length
            b = b - b_k + budgets[k]
        paths = list(parent.paths)
        paths[k] = res.path
        t0 = time.perf_counter()
        conflicts = [c for c in parent.conflicts if k not in c.agents]
        conflicts.extend(detect_agent_conflicts(paths, k))
        conflicts.sort(key=Conflict.sort_key)
        self.stats.timings["conflicts"] += time.perf_counter() - t0
        child = CTNode(paths, budgets, conflicts, constraint=constraint, parent=parent, b=b)
        self.stats.generated += 1
        if self.stats.generated > self.config.node_limit:
            raise LimitExceeded
        if self.hooks.on_generate:
            self.hooks.on_generate(child)
        return child

    def solve(self) -> SolveResult:
        start = time.perf_counter()
        self.deadline = start + self.config.time_limit
        try:
            status, node = self._search()
        except SearchTimeout:
            status, node = TIMEOUT, None
        except LimitExceeded:
            status, node = LIMIT_EXCEEDED, None
        runtime = time.perf_counter() - start
        if node is None:
            return SolveResult(status, runtime=runtime, stats=self.stats)
        report = validate_plan(self.grid, self.tasks, node.paths)
        if not report.ok:
            raise AssertionError(f"solver produced an invalid plan:\n{report.summary()}")
        return SolveResult(SOLVED, node.paths, node.cost, runtime, self.stats)

    def _search(self):
        t0 = time.perf_counter()
        if certify_unsolvable(self.grid, self.tasks, self.config.certify_limit):
            return NO_SOLUTION, None
        root = self.generate_root()
        self.stats.timings["root"] = time.perf_counter() - t0
        if root is None:
            return NO_SOLUTION, None
        queues = HighLevelQueues()
        self.queues = queues
        queues.push(root)
        while len(queues):
            if time.perf_counter() > self.deadline:
                return TIMEOUT, None
            tick = time.perf_counter()
            head = queues.head_b()
            node = queues.select()
            self.stats.b_min = queues.b_min
            self.stats.lower_bound = queues.b_min / self.w
            if self.hooks.on_select:
                self.hooks.on_select(queues, head, node)
            self.stats.expanded += 1
            self.stats.timings["high_level"] += time.perf_counter() - tick
            while True:
                if not node.conflicts:
                    return SOLVED, node
                constraints = resolve_conflict(choose_conflict(node))
                children = []
                adopted = None
                for constraint in constraints:
                    child = self.generate_child(node, constraint)
                    if child is None:
                        continue
                    if self.config.bypass and self._bypass_ok(node, child, queues.b_min):
                        adopted = child
                        break
                    children.append(child)
                if adopted is None:
                    queues.push_all(children)
                    break
                if self.hooks.on_bypass:
                    self.hooks.on_bypass(node, adopted, queues.b_min)
                node.paths = adopted.paths
                node.conflicts = adopted.conflicts
                node.cost = adopted.cost
                node.h_c = adopted.h_c
                self.stats.bypasses += 1
        return NO_SOLUTION, None

    @staticmethod
    def _bypass_ok(node: CTNode, child: CTNode, b_min: Fraction) -> bool:
        if child.cost > b_min or child.h_c >= node.h_c:
            return False
        # the adopted path must also fit the parent's own budget for that agent,
        # otherwise later children of the parent could fall outside FOCAL for good
        k = child.constraint.agent
        return len(child.paths[k]) - 1 <= node.budgets[k]


def solve(grid: GridMap, tasks: Sequence[AgentTask], config: SolverConfig | None = None,
          hooks: Hooks | None = None) -> SolveResult:
    """Run CBSB (``config.bypass=False``) or CBSB-BP on one instance."""
    return CBSB(grid, tasks, config, hooks).solve()


def generate_root(grid: GridMap, tasks: Sequence[AgentTask], w=1.0) -> CTNode | None:
    return CBSB(grid, tasks, SolverConfig(w=w)).generate_root()


def certify_unsolvable(grid: GridMap, tasks: Sequence[AgentTask], limit: int) -> bool:
    """True only when the instance provably has no solution.

    Explores the joint configuration space (agent positions, no time) when it
    has at most ``limit`` states; larger instances are never certified.
    """
    m = len(tasks)
    n = grid.num_free
    if m == 0:
        return False
    heuristics = [build_heuristic(grid, t.target) for t in tasks]
    if any(t.start not in h for t, h in zip(tasks, heuristics)):
        return True
    if m == 1:
        return False
    size = 1
    for i in range(m):
        size *= n - i
        if size > limit:
            return False
    start = tuple(t.start for t in tasks)
    goal = tuple(t.target for t in tasks)
    # greedy best-first towards the goal configuration; exhausting it proves unsolvability
    seen = {start}
    frontier = [(sum(h[s] for h, s in zip(heuristics, start)), start)]
    while frontier:
        _, state = heapq.heappop(frontier)
        if state == goal:
            return False
        for nxt in _joint_moves(grid, state, heuristics):
            if nxt not in seen:
                seen.add(nxt)
                heapq.heappush(frontier, (sum(h[s] for h, s in zip(heuristics, nxt)), nxt))
    return True


def _joint_moves(grid: GridMap, state, heuristics):
    m = len(state)
    choices = [[v for v in grid.neighbors(s) if v in heuristics[i]] for i, s in enumerate(state)]
    out = []

    def extend(i, partial, used):
        if i == m:
            out.append(tuple(partial))
            return
        for v in choices[i]:
            if v in used:
                continue
            # no swaps with an already-placed agent
            if any(partial[j] == state[i] and state[j] == v for j in range(i)):
                continue
            partial.append(v)
            used.add(v)
            extend(i + 1, partial, used)
            used.discard(v)
            partial.pop()

    extend(0, [], set())
    return out
