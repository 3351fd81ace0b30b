import itertools
import random

import pytest

from cbsb.core import (
    AgentTask,
    Conflict,
    GridMap,
    check_tasks,
    detect_agent_conflicts,
    detect_conflicts,
    neighbors,
    validate_plan,
)
from instances import A, B, C, D, random_grid, random_walk, swap_instance


def test_neighbors_single_cell():
    assert neighbors(GridMap.empty(1, 1), (0, 0)) == ((0, 0),)


def test_neighbors_fixed_order():
    assert list(neighbors(GridMap.empty(3, 3), (1, 1))) == [(1, 1), (0, 1), (1, 2), (2, 1), (1, 0)]


def test_neighbors_skip_blocked():
    grid = GridMap.from_strings([".@.", "...", "..."])
    assert list(neighbors(grid, (1, 1))) == [(1, 1), (1, 2), (2, 1), (1, 0)]


def test_grid_rejects_bad_shape():
    with pytest.raises(ValueError):
        GridMap.empty(0, 3)
    with pytest.raises(ValueError):
        GridMap.from_strings(["..", "..."])


def test_check_tasks():
    grid = GridMap.from_strings(["..@", "..."])
    check_tasks(grid, [AgentTask(0, (0, 0), (1, 2))])
    with pytest.raises(ValueError, match="blocked"):
        check_tasks(grid, [AgentTask(0, (0, 2), (1, 2))])
    with pytest.raises(ValueError, match="out of bounds"):
        check_tasks(grid, [AgentTask(0, (0, 0), (5, 2))])
    with pytest.raises(ValueError, match="shares its target"):
        check_tasks(grid, [AgentTask(0, (0, 0), (1, 2)), AgentTask(1, (0, 1), (1, 2))])
    with pytest.raises(ValueError, match="ids"):
        check_tasks(grid, [AgentTask(1, (0, 0), (1, 2))])


def test_disjoint_paths_no_conflicts():
    paths = [[(0, c) for c in range(5)], [(4, c) for c in range(5)]]
    assert detect_conflicts(paths) == []


def test_vertex_conflict():
    assert detect_conflicts([[(0, 0), (0, 1)], [(0, 2), (0, 1)]]) == [
        Conflict("vertex", (0, 1), ((0, 1),), 1)
    ]


def test_edge_conflict():
    assert detect_conflicts([[(0, 0), (0, 1)], [(0, 1), (0, 0)]]) == [
        Conflict("edge", (0, 1), ((0, 0), (0, 1)), 1)
    ]


def test_edge_locations_follow_lower_agent():
    (c,) = detect_conflicts([[(0, 1), (0, 0)], [(0, 0), (0, 1)]])
    assert c.locations == ((0, 1), (0, 0))


def test_parked_agent_conflicts_later():
    # agent 0 parks at (0,1) at t=1; agent 1 passes through it at t=2
    paths = [[(0, 0), (0, 1)], [(1, 1), (1, 1), (0, 1), (0, 2)]]
    assert detect_conflicts(paths) == [Conflict("vertex", (0, 1), ((0, 1),), 2)]


def test_sorted_by_time_then_pair():
    paths = [[(0, 0), (0, 1), (0, 2)], [(1, 0), (1, 1), (0, 2)], [(2, 1), (1, 1), (1, 2)]]
    got = detect_conflicts(paths)
    assert [(c.timestep, c.agents) for c in got] == [(1, (1, 2)), (2, (0, 1))]


def _permuted(paths, perm):
    return [paths[perm[i]] for i in range(len(paths))]


@pytest.mark.parametrize("seed", range(30))
def test_detect_conflicts_symmetric_and_agent_subset(seed):
    rng = random.Random(seed)
    grid = random_grid(rng, max_side=4, density=(0.0, 0.2))
    paths = [random_walk(rng, grid, rng.randint(0, 6)) for _ in range(rng.randint(2, 4))]
    base = detect_conflicts(paths)

    def canon(conflicts, mapping):
        out = set()
        for c in conflicts:
            i, j = mapping[c.agents[0]], mapping[c.agents[1]]
            locs = c.locations if c.kind == "vertex" or i < j else c.locations[::-1]
            out.add((c.kind, tuple(sorted((i, j))), locs, c.timestep))
        return out

    identity = list(range(len(paths)))
    for perm in itertools.permutations(identity):
        permuted = _permuted(paths, perm)
        assert canon(detect_conflicts(permuted), perm) == canon(base, identity)

    for k in range(len(paths)):
        assert detect_agent_conflicts(paths, k) == [c for c in base if k in c.agents]


@pytest.mark.parametrize("seed", range(20))
def test_trailing_waits_only_add_conflicts(seed):
    rng = random.Random(100 + seed)
    grid = random_grid(rng, max_side=4, density=(0.0, 0.2))
    paths = [random_walk(rng, grid, rng.randint(1, 5)) for _ in range(3)]
    before = {(c.kind, c.agents, c.timestep) for c in detect_conflicts(paths)}
    paths[0] = paths[0] + [paths[0][-1]] * 3
    after = {(c.kind, c.agents, c.timestep) for c in detect_conflicts(paths)}
    assert before <= after


def test_validate_swap_solution():
    grid, tasks = swap_instance()
    paths = [[A, A, B, C], [C, B, D, B, A]]
    report = validate_plan(grid, tasks, paths)
    assert report.ok and not report and len(report) == 0
    assert report.cost == 7


def test_validate_teleport():
    grid = GridMap.empty(1, 4)
    tasks = [AgentTask(0, (0, 0), (0, 2))]
    report = validate_plan(grid, tasks, [[(0, 0), (0, 2)]])
    assert [v.kind for v in report.violations] == ["adjacency"]


def test_validate_swap_conflict():
    grid = GridMap.empty(1, 2)
    tasks = [AgentTask(0, (0, 0), (0, 1)), AgentTask(1, (0, 1), (0, 0))]
    report = validate_plan(grid, tasks, [[(0, 0), (0, 1)], [(0, 1), (0, 0)]])
    assert report.violations == []
    assert [c.kind for c in report.conflicts] == ["edge"]


def test_validate_malformed():
    grid = GridMap.from_strings(["..@", "..."])
    tasks = [AgentTask(0, (0, 0), (0, 1)), AgentTask(1, (1, 0), (1, 2))]
    report = validate_plan(grid, tasks, [[(0, 1), (0, 2)], []])
    kinds = sorted(v.kind for v in report.violations)
    assert kinds == ["bad-start", "bad-target", "blocked-cell", "empty-path"]
    assert "agent 0" in report.summary()
    assert not validate_plan(grid, tasks, [[(0, 0), (0, 1)]]).ok
