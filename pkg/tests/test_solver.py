from dataclasses import dataclass
from fractions import Fraction

import pytest

from cbsb.core import AgentTask, Conflict, GridMap, edge_constraint, vertex_constraint
from cbsb.oracles import constrained_shortest_length, joint_astar
from cbsb.solver import (
    CBSB,
    LIMIT_EXCEEDED,
    NO_SOLUTION,
    SOLVED,
    TIMEOUT,
    CTNode,
    HighLevelQueues,
    Hooks,
    SolverConfig,
    as_fraction,
    certify_unsolvable,
    choose_conflict,
    generate_root,
    resolve_conflict,
    solve,
)
from instances import A, B, C, D, multi_agent_cases, spell, swap_instance


class Trace:
    """Records generated nodes and the order in which they are selected."""

    def __init__(self):
        self.generated = []
        self.selected = []
        self.heads = []
        self._index = {}

    def hooks(self):
        return Hooks(on_select=self.on_select, on_generate=self.on_generate)

    def on_generate(self, node):
        self._index[node.id] = len(self.generated)
        self.generated.append(node)

    def on_select(self, queues, head, node):
        self.heads.append((head, queues.b_min))
        self.selected.append(self._index[node.id])


def test_swap_w2_walkthrough():
    grid, tasks = swap_instance()
    trace = Trace()
    res = solve(grid, tasks, SolverConfig(w=2), trace.hooks())
    root, n1, n2, n3, n4 = trace.generated
    assert root.budgets == [4, 4] and root.b == 8
    assert [spell(p) for p in root.paths] == ["ABC", "CBA"]
    assert root.conflicts == [Conflict("vertex", (0, 1), (B,), 1)]
    # children respect their budgets, which therefore stay put
    assert all(n.budgets == [4, 4] for n in trace.generated)
    assert spell(n1.paths[0]) == "AABC" and spell(n2.paths[1]) == "CCBA"
    assert spell(n4.paths[1]) == "CBDBA" and n4.h_c == 0
    assert trace.selected == [0, 1, 4]
    assert res.status == SOLVED and res.cost == 7 == joint_astar(grid, tasks).cost


def test_swap_w1_walkthrough():
    grid, tasks = swap_instance()
    trace = Trace()
    res = solve(grid, tasks, SolverConfig(w=1), trace.hooks())
    gen = trace.generated
    assert gen[0].budgets == [2, 2] and gen[0].b == 4
    # the constrained replan of agent 0 overshoots its budget of 2 and raises it to 3
    assert spell(gen[1].paths[0]) == "AABC" and gen[1].budgets == [3, 2]
    assert gen[2].budgets == [2, 3]
    # frozen from the documented tie-breaking: FOCAL key (h_c, b, insertion order)
    assert trace.selected == [0, 1, 2, 3, 4, 5, 6, 9]
    # conflict-free nodes appear with cost 7 while b_min is 6 and wait for it to rise
    goals = [i for i, n in enumerate(gen) if not n.conflicts]
    assert goals == [9, 10]
    assert [gen[i].cost for i in goals] == [7, 7]
    b_min_at_select = [bmin for _, bmin in trace.heads]
    assert b_min_at_select == [4, 5, 5, 6, 6, 6, 6, 7]
    assert res.cost == 7


def test_w1_budget_sum_equals_cost():
    for grid, tasks in multi_agent_cases(11, 25):
        trace = Trace()
        solve(grid, tasks, SolverConfig(w=1, time_limit=20), trace.hooks())
        assert all(n.b == n.cost for n in trace.generated)


def test_root_single_agent():
    grid = GridMap.empty(3, 3)
    root = generate_root(grid, [AgentTask(0, (0, 0), (2, 2))], w=1.5)
    assert root.conflicts == [] and root.cost == 4 and root.b == 6
    res = solve(grid, [AgentTask(0, (0, 0), (2, 2))])
    assert res.status == SOLVED and res.cost == 4 and res.stats.expanded == 1


def test_root_budget_raised_to_returned_length():
    # agent 1 must wait for agent 0 to pass; plans are built against earlier agents
    grid = GridMap.from_strings(["...", "@.@"])
    root = generate_root(grid, [AgentTask(0, A, C), AgentTask(1, D, (0, 0))], w=1)
    assert root.budgets[1] >= 2


def test_generate_child_dead_end():
    grid = GridMap.empty(1, 3)
    tasks = [AgentTask(0, (0, 0), (0, 2)), AgentTask(1, (0, 2), (0, 0))]
    solver = CBSB(grid, tasks)
    root = solver.generate_root()
    # forbid the only cells agent 0 could occupy at t=1 by stacking constraints
    node = CTNode(root.paths, root.budgets, root.conflicts, vertex_constraint(0, (0, 0), 1), root)
    assert solver.generate_child(node, vertex_constraint(0, (0, 1), 1)) is None
    assert solver.stats.dead_ends == 1


def test_generate_child_lineage():
    grid, tasks = swap_instance()
    solver = CBSB(grid, tasks, SolverConfig(w=1))
    root = solver.generate_root()
    child = solver.generate_child(root, vertex_constraint(0, B, 1))
    assert child.constraints == [vertex_constraint(0, B, 1)]
    assert child.paths[1] == root.paths[1]
    assert child.budgets[0] == 3 and child.b == 5
    grandchild = solver.generate_child(child, edge_constraint(1, B, A, 2))
    assert grandchild.constraints == [vertex_constraint(0, B, 1), edge_constraint(1, B, A, 2)]
    assert all(g >= c for g, c in zip(grandchild.budgets, child.budgets))


def test_choose_conflict_earliest_then_pair():
    late = Conflict("vertex", (0, 1), ((0, 0),), 5)
    early = Conflict("vertex", (1, 2), ((0, 0),), 3)
    first = Conflict("vertex", (0, 2), ((0, 1),), 3)
    node = CTNode([[(0, 0)]], [Fraction(0)], [late, early, first])
    assert choose_conflict(node) == first
    node = CTNode([[(0, 0)]], [Fraction(0)], [late, early])
    assert choose_conflict(node) == early
    assert choose_conflict(CTNode([[(0, 0)]], [Fraction(0)], [late])) == late


def test_resolve_conflict():
    v = resolve_conflict(Conflict("vertex", (0, 1), (B,), 1))
    assert v == (vertex_constraint(0, B, 1), vertex_constraint(1, B, 1))
    e = resolve_conflict(Conflict("edge", (0, 1), (A, B), 1))
    assert e == (edge_constraint(0, A, B, 1), edge_constraint(1, B, A, 1))


@dataclass(eq=False)
class Stub:
    b: Fraction
    cost: int
    h_c: int
    in_open: bool = False
    in_focal: bool = False


def test_focal_admission_bound():
    q = HighLevelQueues()
    root = Stub(Fraction(9), 9, 3)
    q.push(root)
    assert root.in_focal
    over = Stub(Fraction(12), 10, 0)
    q.push(over)
    assert over.in_open and not over.in_focal
    tight = Stub(Fraction(11), 9, 1)
    q.push(tight)
    assert tight.in_focal


def test_select_prefers_fewer_conflicts_and_refills():
    q = HighLevelQueues()
    nodes = [Stub(Fraction(9), 9, 2), Stub(Fraction(9), 8, 0), Stub(Fraction(12), 11, 0)]
    for n in nodes:
        q.push(n)
    assert q.select() is nodes[1]
    assert q.b_min == 9
    assert q.select() is nodes[0]
    # only the over-bound node is left; selecting it raises b_min
    assert q.select() is nodes[2] and q.b_min == 12
    with pytest.raises(IndexError):
        q.select()


def test_fractional_budget_exact():
    assert as_fraction(1.2) * 5 == 6
    with pytest.raises(ValueError):
        SolverConfig(w=0.9)


def test_unsolvable_corridor_swap():
    grid = GridMap.empty(1, 3)
    tasks = [AgentTask(0, (0, 0), (0, 2)), AgentTask(1, (0, 2), (0, 0))]
    assert not joint_astar(grid, tasks).solved
    assert certify_unsolvable(grid, tasks, 10_000)
    assert solve(grid, tasks).status == NO_SOLUTION


def test_dead_end_siding_corridor():
    # a width-1 dead end with the agents ordered the wrong way round
    grid = GridMap.from_strings(["....", "@@@."])
    tasks = [AgentTask(0, (0, 0), (0, 1)), AgentTask(1, (0, 1), (0, 0))]
    assert not joint_astar(grid, tasks).solved
    assert solve(grid, tasks, SolverConfig(w=2, bypass=True)).status == NO_SOLUTION


def test_unreachable_target():
    grid = GridMap.from_strings([".@."])
    res = solve(grid, [AgentTask(0, (0, 0), (0, 2))])
    assert res.status == NO_SOLUTION and res.paths is None


def test_solvable_rotation_not_certified():
    grid = GridMap.empty(2, 2)
    tasks = [AgentTask(0, (0, 0), (0, 1)), AgentTask(1, (0, 1), (1, 1)),
             AgentTask(2, (1, 1), (1, 0)), AgentTask(3, (1, 0), (0, 0))]
    assert not certify_unsolvable(grid, tasks, 10_000)
    res = solve(grid, tasks, SolverConfig(w=1))
    assert res.status == SOLVED and res.cost == 4


def test_limits():
    grid = GridMap.empty(4, 4)
    tasks = [AgentTask(i, (0, i), (3, 3 - i)) for i in range(4)]
    res = solve(grid, tasks, SolverConfig(w=1, node_limit=1))
    assert res.status == LIMIT_EXCEEDED
    res = solve(grid, tasks, SolverConfig(w=1, time_limit=0.0))
    assert res.status == TIMEOUT


@pytest.mark.parametrize("bypass", [False, True])
@pytest.mark.parametrize("w", [1, 1.2, 2, 10])
def test_invariants_small(w, bypass):
    wf = as_fraction(w)
    for grid, tasks in multi_agent_cases(3, 30):
        opt = joint_astar(grid, tasks)
        trace = Trace()
        adopted = []
        hooks = trace.hooks()
        hooks.on_bypass = lambda node, child, b_min: adopted.append((node.h_c, child.h_c, child.cost, b_min))
        res = solve(grid, tasks, SolverConfig(w=w, bypass=bypass, time_limit=20), hooks)
        if not opt.solved:
            assert res.status == NO_SOLUTION
            continue
        assert res.status == SOLVED and res.cost <= wf * opt.cost
        if w == 1:
            assert res.cost == opt.cost
        heads = [h for h, _ in trace.heads]
        b_mins = [b for _, b in trace.heads]
        assert all(h <= wf * opt.cost for h in heads)
        assert b_mins == sorted(b_mins)
        for node in trace.generated:
            assert node.b == sum(node.budgets)
            for i, task in enumerate(tasks):
                f_i = constrained_shortest_length(grid, task, node.constraints_for(i))
                assert node.budgets[i] <= wf * f_i
            if node.parent is not None:
                assert node.constraints[:-1] == node.parent.constraints
                assert all(c >= p for c, p in zip(node.budgets, node.parent.budgets))
        for parent_hc, child_hc, cost, b_min in adopted:
            assert child_hc < parent_hc and cost <= b_min
        if not bypass:
            assert adopted == []
