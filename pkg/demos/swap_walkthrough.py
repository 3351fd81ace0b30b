"""Two agents swap ends of a T-shaped corridor; trace the constraint tree.

The top row is a corridor A-B-C with a side pocket D under B. Agent 0 goes
A->C and agent 1 goes C->A, so one of them must duck into D. We print every
node the high level selects, with budgets and b_min, for w=2 and w=1.
"""
from cbsb.core import AgentTask, GridMap
from cbsb.oracles import joint_astar
from cbsb.solver import Hooks, SolverConfig, solve

NAMES = {(0, 0): "A", (0, 1): "B", (0, 2): "C", (1, 1): "D"}
grid = GridMap.from_strings(["...", "@.@"])
tasks = [AgentTask(0, (0, 0), (0, 2)), AgentTask(1, (0, 2), (0, 0))]


def spell(path):
    return "".join(NAMES[v] for v in path)


def trace(w):
    def on_select(queues, head_b, node):
        paths = " ".join(spell(p) for p in node.paths)
        print(f"  select id={node.id:<3} b_min={queues.b_min!s:<3} budgets={[str(b) for b in node.budgets]} "
              f"cost={node.cost} conflicts={node.h_c} paths={paths}")

    res = solve(grid, tasks, SolverConfig(w=w), Hooks(on_select=on_select))
    print(f"  -> {res.status} cost={res.cost} nodes={res.stats.generated}")


print("optimal flowtime:", joint_astar(grid, tasks).cost)
for w in (2, 1):
    print(f"w={w}")
    trace(w)
