"""Single-node vs adaptive multiple-node selection at solve time.

The adaptive schedule takes up to 8 nodes per policy evaluation while the
candidate set is large and falls back to one at the end, trading a strictly
bounded amount of solution quality for far fewer policy evaluations.
"""
import numpy as np

from graphrl import (PolicyParams, SelectionSchedule, WorkerGroup, generate_er,
                     matching_lower_bound, run_workers, solve, two_approx_mvc)

graph = generate_er(400, 0.05, seed=3)
params = PolicyParams.initialize(16, 2, seed=0, scale=0.5)
print(graph, "- matching lower bound", matching_lower_bound(graph),
      "- 2-approx size", two_approx_mvc(graph).size)

schedules = {
    "d=1 (one node per evaluation)": SelectionSchedule.single(),
    "adaptive 8/4/2/1": SelectionSchedule.adaptive(),
    "fixed d=4": SelectionSchedule.fixed(4),
}


def run(comm, schedule):
    return solve([graph], params, comm, schedule=schedule)[0]


for label, schedule in schedules.items():
    res = run_workers(2, run, schedule)[0]
    print(f"{label:32s} cover {len(res.cover):4d}  "
          f"policy evaluations {res.policy_evals:4d}  "
          f"skipped-in-group {res.skipped}")

# the schedule thresholds in candidate-set fractions of N
sched = SelectionSchedule.adaptive()
for frac in (0.6, 0.45, 0.2, 0.1, 0.05):
    print(f"|C| = {frac:.2f} N -> d = {sched.d_for(int(frac * 400), 400)}")
