"""Grid MAPF instances, conflict semantics and plan validation.

Locations are ``(row, col)`` tuples. A path is a list of locations indexed by
timestep; an agent stays parked on the last vertex of its path forever.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Location = tuple[int, int]
Path = list[Location]

# wait, up, right, down, left
_MOVES = ((0, 0), (-1, 0), (0, 1), (1, 0), (0, -1))


@dataclass(frozen=True, eq=False)
class GridMap:
    """4-connected grid; ``blocked[row, col]`` is True for obstacle cells."""

    width: int
    height: int
    blocked: np.ndarray
    _adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")
        blocked = np.asarray(self.blocked, dtype=bool)
        if blocked.shape != (self.height, self.width):
            raise ValueError(
                f"blocked has shape {blocked.shape}, expected {(self.height, self.width)}"
            )
        blocked.setflags(write=False)
        object.__setattr__(self, "blocked", blocked)

        adj = {}
        free = ~blocked
        for r, c in zip(*np.nonzero(free)):
            r, c = int(r), int(c)
            nbrs = []
            for dr, dc in _MOVES:
                nr, nc = r + dr, c + dc
                if 0 <= nr < self.height and 0 <= nc < self.width and free[nr, nc]:
                    nbrs.append((nr, nc))
            adj[(r, c)] = tuple(nbrs)
        object.__setattr__(self, "_adj", adj)

    @classmethod
    def from_strings(cls, rows: Sequence[str], blocked_chars: str = "@#") -> "GridMap":
        """Build a map from ASCII rows, e.g. ``["..@", "..."]``."""
        height = len(rows)
        width = len(rows[0]) if rows else 0
        if any(len(r) != width for r in rows):
            raise ValueError("ragged rows")
        blocked = np.array([[ch in blocked_chars for ch in row] for row in rows], dtype=bool)
        return cls(width, height, blocked)

    @classmethod
    def empty(cls, height: int, width: int) -> "GridMap":
        return cls(width, height, np.zeros((height, width), dtype=bool))

    def in_bounds(self, loc: Location) -> bool:
        r, c = loc
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, loc: Location) -> bool:
        return loc in self._adj

    @property
    def free_cells(self) -> list[Location]:
        return list(self._adj)

    @property
    def num_free(self) -> int:
        return len(self._adj)

    def neighbors(self, loc: Location) -> tuple[Location, ...]:
        return self._adj[loc]

    def to_strings(self) -> list[str]:
        return ["".join("@" if b else "." for b in row) for row in self.blocked]


def neighbors(grid: GridMap, loc: Location) -> tuple[Location, ...]:
    """Wait plus free 4-neighbours, in the order wait, up, right, down, left."""
    return grid.neighbors(loc)


@dataclass(frozen=True)
class AgentTask:
    id: int
    start: Location
    target: Location


def check_tasks(grid: GridMap, tasks: Sequence[AgentTask]) -> None:
    """Raise ValueError unless ``tasks`` form a well-posed instance on ``grid``."""
    seen_starts: set[Location] = set()
    seen_targets: set[Location] = set()
    for i, task in enumerate(tasks):
        if task.id != i:
            raise ValueError(f"agent ids must be 0..m-1 in order, got {task.id} at position {i}")
        for name, loc in (("start", task.start), ("target", task.target)):
            if not grid.in_bounds(loc):
                raise ValueError(f"agent {i} {name} {loc} is out of bounds")
            if not grid.is_free(loc):
                raise ValueError(f"agent {i} {name} {loc} is blocked")
        if task.start in seen_starts:
            raise ValueError(f"agent {i} shares its start {task.start}")
        if task.target in seen_targets:
            raise ValueError(f"agent {i} shares its target {task.target}")
        seen_starts.add(task.start)
        seen_targets.add(task.target)


def path_cost(path: Path) -> int:
    return len(path) - 1


def plan_cost(paths: Sequence[Path]) -> int:
    return sum(len(p) - 1 for p in paths)


def location_at(path: Path, t: int) -> Location:
    return path[t] if t < len(path) else path[-1]


@dataclass(frozen=True)
class Conflict:
    """A collision between agents ``agents[0] < agents[1]``.

    For an edge conflict ``locations`` is ``(u, v)``: agent ``agents[0]`` moves
    u->v while agent ``agents[1]`` moves v->u, arriving at ``timestep``.
    """

    kind: str
    agents: tuple[int, int]
    locations: tuple[Location, ...]
    timestep: int

    def sort_key(self):
        return (self.timestep, self.agents)


@dataclass(frozen=True)
class Constraint:
    agent: int
    kind: str
    locations: tuple[Location, ...]
    timestep: int


def vertex_constraint(agent: int, loc: Location, t: int) -> Constraint:
    return Constraint(agent, "vertex", (loc,), t)


def edge_constraint(agent: int, u: Location, v: Location, t: int) -> Constraint:
    return Constraint(agent, "edge", (u, v), t)


def _conflicts_at(paths: Sequence[Path], agents: Iterable[int], t: int) -> list[Conflict]:
    out = []
    occupants: dict[Location, list[int]] = defaultdict(list)
    moves: dict[tuple[Location, Location], list[int]] = defaultdict(list)
    for a in agents:
        p = paths[a]
        loc = p[t] if t < len(p) else p[-1]
        occupants[loc].append(a)
        if t and t < len(p) and p[t - 1] != loc:
            moves[(p[t - 1], loc)].append(a)
    vertex_pairs = set()
    for loc, occ in occupants.items():
        if len(occ) < 2:
            continue
        occ.sort()
        for x in range(len(occ)):
            for y in range(x + 1, len(occ)):
                pair = (occ[x], occ[y])
                vertex_pairs.add(pair)
                out.append(Conflict("vertex", pair, (loc,), t))
    for (u, v), movers in moves.items():
        if u > v:
            continue  # each swap seen once, from the lexicographically smaller side
        back = moves.get((v, u))
        if not back:
            continue
        for a in movers:
            for b in back:
                i, j = (a, b) if a < b else (b, a)
                if (i, j) in vertex_pairs:
                    continue
                locs = (u, v) if i == a else (v, u)
                out.append(Conflict("edge", (i, j), locs, t))
    return out


def detect_conflicts(paths: Sequence[Path]) -> list[Conflict]:
    """Every vertex/edge conflict of a plan, sorted by (timestep, agent pair).

    Agents are parked on their final vertex up to the longest path's length.
    At most one conflict is reported per agent pair and timestep.
    """
    if not paths:
        return []
    horizon = max(len(p) for p in paths) - 1
    agents = range(len(paths))
    out = []
    for t in range(horizon + 1):
        out.extend(_conflicts_at(paths, agents, t))
    out.sort(key=Conflict.sort_key)
    return out


def detect_agent_conflicts(paths: Sequence[Path], agent: int) -> list[Conflict]:
    """The subset of :func:`detect_conflicts` involving ``agent``."""
    horizon = max(len(p) for p in paths) - 1
    mine = paths[agent]
    out = []
    for other, theirs in enumerate(paths):
        if other == agent:
            continue
        first = agent < other
        pair = (agent, other) if first else (other, agent)
        prev_a, prev_b = mine[0], theirs[0]
        if prev_a == prev_b:
            out.append(Conflict("vertex", pair, (prev_a,), 0))
        for t in range(1, horizon + 1):
            a = mine[t] if t < len(mine) else mine[-1]
            b = theirs[t] if t < len(theirs) else theirs[-1]
            if a == b:
                out.append(Conflict("vertex", pair, (a,), t))
            elif a != prev_a and a == prev_b and b == prev_a:
                locs = (prev_a, a) if first else (prev_b, b)
                out.append(Conflict("edge", pair, locs, t))
            prev_a, prev_b = a, b
    out.sort(key=Conflict.sort_key)
    return out


@dataclass(frozen=True)
class Violation:
    kind: str
    agent: int
    timestep: int | None
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation]
    conflicts: list[Conflict]
    cost: int

    @property
    def ok(self) -> bool:
        return not self.violations and not self.conflicts

    def __len__(self) -> int:
        return len(self.violations) + len(self.conflicts)

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return not self.ok

    def summary(self) -> str:
        if self.ok:
            return f"valid plan, cost {self.cost}"
        lines = [f"{v.kind}: agent {v.agent} t={v.timestep}: {v.message}" for v in self.violations]
        lines += [
            f"{c.kind} conflict: agents {c.agents} at {c.locations} t={c.timestep}" for c in self.conflicts
        ]
        return "\n".join(lines)


def validate_plan(grid: GridMap, tasks: Sequence[AgentTask], paths: Sequence[Path]) -> ValidationReport:
    """Check a plan independently of any solver; violations are returned as data."""
    violations: list[Violation] = []
    if len(paths) != len(tasks):
        violations.append(
            Violation("plan-size", -1, None, f"{len(paths)} paths for {len(tasks)} agents")
        )
    well_formed: list[Path] = []
    for task, path in zip(tasks, paths):
        i = task.id
        path = [tuple(v) for v in path]
        if not path:
            violations.append(Violation("empty-path", i, None, "path has no vertices"))
            continue
        if path[0] != task.start:
            violations.append(Violation("bad-start", i, 0, f"starts at {path[0]}, expected {task.start}"))
        if path[-1] != task.target:
            violations.append(
                Violation("bad-target", i, len(path) - 1, f"ends at {path[-1]}, expected {task.target}")
            )
        for t, loc in enumerate(path):
            if not grid.in_bounds(loc) or not grid.is_free(loc):
                violations.append(Violation("blocked-cell", i, t, f"{loc} is not a free cell"))
        for t in range(1, len(path)):
            (r0, c0), (r1, c1) = path[t - 1], path[t]
            if abs(r0 - r1) + abs(c0 - c1) > 1:
                violations.append(
                    Violation("adjacency", i, t, f"jump {path[t - 1]} -> {path[t]}")
                )
        well_formed.append(path)
    conflicts = detect_conflicts(well_formed) if len(well_formed) == len(paths) else []
    cost = sum(len(p) - 1 for p in paths if p)
    return ValidationReport(violations, conflicts, cost)
