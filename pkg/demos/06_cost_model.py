"""The analytical cost and memory model, and how it compares to a live run.

Evaluates the closed-form flop/latency/bandwidth terms and the memory
formulas over a worker-count sweep, then checks the collective counters of
an instrumented run against the model's predictions.
"""
import numpy as np

from graphrl import (CostConfig, PolicyParams, WorkerGroup,
                     compare_instrumented, efficiency_action,
                     efficiency_embed, embed_forward, expected_edges,
                     generate_er, memory_bytes, partition_rows, q_forward,
                     run_workers, t_action, t_embed, t_embed_seq)
from graphrl.state import PartitionedState

# --- scaling table ----------------------------------------------------------

print(f"{'P':>2} {'embed flops':>14} {'eff_embed':>10} {'eff_action':>10} "
      f"{'adj bytes':>12} {'replay bytes':>13}")
for p in (1, 2, 4, 6):
    cfg = CostConfig(b=1, n=21_000, rho=0.15, k=32, l=2, p=p)
    mem = memory_bytes(cfg)
    print(f"{p:>2} {t_embed(cfg).compute:>14.4g} {efficiency_embed(cfg):>10.6f} "
          f"{efficiency_action(cfg):>10.6f} {mem['adjacency']:>12.4g} "
          f"{mem['replay']:>13.4g}")

cfg1 = CostConfig(b=1, n=21_000, rho=0.15, k=32, l=2, p=1)
print(f"\nexpected edges at N=21000, rho=0.15: {expected_edges(cfg1):,.0f} "
      f"(adjacency {memory_bytes(cfg1)['adjacency'] / 1e9:.3f} GB)")

# splitting work over P ranks divides the compute term exactly
cfg6 = CostConfig(b=1, n=21_000, rho=0.15, k=32, l=2, p=6)
assert np.isclose(t_embed_seq(cfg6), 6 * t_embed(cfg6).compute, rtol=1e-12)

# --- model vs a live instrumented run ----------------------------------------

n, k, layers, batch, p = 60, 8, 2, 4, 2
graphs = [generate_er(n, 0.2, 10 + i) for i in range(batch)]
params = PolicyParams.initialize(k, layers, seed=0)
group = WorkerGroup(p)


def probe(comm):
    part = partition_rows(n, comm.size)[comm.rank]
    state = PartitionedState(graphs, part)
    for _ in range(5):
        embed = embed_forward(state, params, comm)
        q_forward(embed, state.cand, params, comm)


run_workers(p, probe, group=group)
stats = group.stats_snapshot()
counters = {
    "embed_forward_calls": 5,
    "embed_allreduce_calls": stats["embed_fwd"].calls,
    "embed_allreduce_elements": stats["embed_fwd"].elements,
    "q_forward_calls": 5,
    "q_allreduce_calls": stats["q_fwd"].calls,
    "q_allreduce_elements": stats["q_fwd"].elements,
}
live_cfg = CostConfig(b=batch, n=n, rho=0.2, k=k, l=layers, p=p)
print("\nmodel vs measured:")
for row in compare_instrumented(live_cfg, counters):
    flag = "  <-- diverges" if row.flagged else ""
    print(f"  {row.name}: model {row.model:g}, measured {row.measured:g}{flag}")
