"""Run the four solvers on a vendored benchmark map and summarise.

Uses empty-32-32 with 50 agents on the first five scenarios. Set CBSB_BENCH_DIR
to a MovingAI download to try other maps.
"""
import sys

from cbsb.bench import run_benchmark, summarize
from cbsb.movingai import find_benchmark

name = sys.argv[1] if len(sys.argv) > 1 else "empty-32-32"
found = find_benchmark(name)
if found is None:
    sys.exit(f"{name} not found; point CBSB_BENCH_DIR at the benchmark files")
map_file, scens = found

records = run_benchmark([map_file], {map_file: scens[:5]}, ["cbs", "cbsb", "cbsb-bp", "ecbs"],
                        [1.2], [50], time_limit=10)
for cell in summarize(records):
    print(f"{cell.solver:8} w={cell.w:<4} solved {cell.solved}/{cell.runs}  "
          f"mean time {cell.mean_runtime:.3f}s  mean cost {cell.mean_cost or float("nan"):.1f}")
