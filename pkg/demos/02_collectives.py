"""The in-process worker group and its two collectives.

Workers are threads that cooperate only through sum-all-reduce and
all-gather; reduction order is fixed (ascending rank) so every run is
bitwise reproducible for a given worker count.
"""
import numpy as np

from graphrl import WorkerGroup, run_workers

# --- sum-all-reduce ----------------------------------------------------------


def partial_sums(comm):
    # every rank contributes its own block; everyone receives the total
    local = np.arange(3, dtype=np.float64) + 10 * comm.rank
    total = comm.all_reduce_sum(local)
    return total


for p in (1, 2, 4):
    outs = run_workers(p, partial_sums)
    print(f"P={p}: every rank sees", outs[0],
          "- identical on all ranks:", all(np.array_equal(o, outs[0]) for o in outs))

# --- all-gather --------------------------------------------------------------


def gather_scores(comm):
    # rank-local score blocks concatenate into global node order
    base = comm.rank * 4
    local_scores = np.arange(base, base + 4, dtype=np.float64)
    return comm.all_gather(local_scores)


print("gathered:", run_workers(2, gather_scores)[0])

# --- instrumentation ----------------------------------------------------------

group = WorkerGroup(2)


def tagged(comm):
    for _ in range(3):
        comm.all_reduce_sum(np.zeros((2, 8)), tag="embed_fwd")
    comm.all_gather(np.zeros(4), tag="select")


run_workers(2, tagged, group=group)
for tag, stats in sorted(group.stats_snapshot().items()):
    print(f"tag {tag!r}: {stats.calls} call(s), {stats.elements} element(s) per rank")
