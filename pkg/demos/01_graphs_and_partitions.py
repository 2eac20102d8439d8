"""Graphs, generators, and row-wise partitioning.

Walks through the two random-graph families, the edge-list file format, and
how a graph's state is split into per-worker row blocks.
"""
import numpy as np

from graphrl import (Graph, PartitionedState, generate_ba, generate_er,
                     load_edge_list, partition_rows, write_edge_list)

# --- random graphs ---------------------------------------------------------

er = generate_er(20, 0.15, seed=1)
print("ER(20, 0.15):", er, "- mean degree", er.degrees().mean())

ba = generate_ba(20, 4, seed=1)
print("BA(20, d=4): ", ba, "- edge count is C(4,2) + 4*16 =", ba.num_edges)

# determinism: the same seed always rebuilds the same edge set
assert generate_er(20, 0.15, seed=1) == er

# --- files -----------------------------------------------------------------

write_edge_list(er, "/tmp/demo_graph.txt", seed=1)
same = load_edge_list("/tmp/demo_graph.txt")
assert same == er
print("edge-list roundtrip ok; header:",
      open("/tmp/demo_graph.txt").readline().strip())

# --- partitioning ----------------------------------------------------------

# each worker owns a contiguous block of node rows; blocks differ by at
# most one row and cover [0, N) exactly
for p in (1, 2, 3):
    parts = partition_rows(er.num_nodes, p)
    print(f"P={p}:", [(q.row_start, q.row_stop) for q in parts])

# a PartitionedState holds one rank's slice: residual adjacency rows,
# candidate vector, and partial solution for a batch of graphs
part = partition_rows(er.num_nodes, 2)[0]
state = PartitionedState([er], part)
print("rank 0 owns rows", (part.row_start, part.row_stop),
      "- local residual entries:", int(state.local_residual[0]),
      "- local candidates:", int(state.cand.sum()))

# selecting a node zeroes its row (on the owner) and column (everywhere)
# and drops newly covered nodes from the candidate set
v = int(np.flatnonzero(state.cand[0])[0]) + part.row_start
state.apply_action(v)
print(f"after taking node {v}: residual entries",
      int(state.local_residual[0]), "candidates", int(state.cand.sum()))
