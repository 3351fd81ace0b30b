"""How the path budget trades length for conflicts in the single-agent search.

One agent crosses a 3x4 room while another agent's path sits on the straight line.
With room in the budget the searcher waits one step and avoids the crossing; a
tight budget forces the shorter, conflicting route.
"""
import math

from cbsb.core import AgentTask, GridMap
from cbsb.lowlevel import build_cat, find_path

grid = GridMap.from_strings([
    "....",
    "....",
    "....",
])
me = AgentTask(0, (1, 0), (1, 3))
# a second agent walks down column 1, crossing the straight route at t=1
other = [(0, 1), (1, 1), (2, 1)]
cat = build_cat([other])

for budget in (math.inf, 5, 4, 3, 2):
    res = find_path(grid, me, budget, (), cat)
    print(f"budget={budget!s:>4}  length={res.length}  conflicts={res.conflicts}  "
          f"class={res.flag}  path={res.path}")
