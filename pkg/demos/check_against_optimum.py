"""Check bounded suboptimality against the joint-space optimum on random rooms."""
import random

from cbsb.core import AgentTask, GridMap
from cbsb.oracles import joint_astar
from cbsb.solver import SolverConfig, as_fraction, solve

rng = random.Random(7)
worst = {}
limit_hits = 0
for trial in range(25):
    grid = GridMap.from_strings(["".join("@" if rng.random() < 0.2 else "." for _ in range(4)) for _ in range(4)])
    cells = grid.free_cells
    if len(cells) < 6:
        continue
    picks = rng.sample(cells, 6)
    tasks = [AgentTask(i, picks[i], picks[i + 3]) for i in range(3)]
    opt = joint_astar(grid, tasks)
    if not opt.solved:
        continue
    for w in (1, 1.2, 2):
        for bypass in (False, True):
            res = solve(grid, tasks, SolverConfig(w=w, bypass=bypass, time_limit=1))
            if not res.solved:
                limit_hits += 1
            else:
                assert res.cost <= as_fraction(w) * opt.cost
                key = (w, bypass)
                worst[key] = max(worst.get(key, 1), res.cost / opt.cost)

for (w, bypass), ratio in sorted(worst.items()):
    print(f"w={w:<4} bypass={bypass!s:5}  worst cost ratio {ratio:.3f}")
print(f"{limit_hits} runs hit the 1s limit")
