"""The trainable policy: embedding, scoring, exact gradients, Adam.

Runs the forward passes on a small graph, checks the analytic gradients
against finite differences, and takes a few optimizer steps.
"""
import numpy as np

from graphrl import (AdamState, PolicyParams, WorkerGroup, adam_step,
                     embed_forward, generate_er, loss_and_gradients,
                     masked_scores, partition_rows, q_forward)
from graphrl.state import PartitionedState

g = generate_er(12, 0.3, seed=4)
group = WorkerGroup(1)
comm = group.comm(0)
part = partition_rows(g.num_nodes, 1)[0]
state = PartitionedState([g], part, dtype=np.float64)

params = PolicyParams.initialize(embed_dim=8, num_layers=2, seed=0,
                                 scale=0.4, dtype=np.float64)

# --- forward -----------------------------------------------------------------

embed = embed_forward(state, params, comm)       # (B, K, local_rows)
print("embedding shape:", embed.shape, "- all entries >= 0:",
      bool((embed >= 0).all()))

scores = q_forward(embed, state.cand, params, comm)
print("raw scores:", np.round(scores[0], 4))
print("ranking (best first):",
      np.argsort(-masked_scores(scores, state.cand)[0]).tolist()[:5])

# --- exact gradients ----------------------------------------------------------

actions = np.array([int(np.argmax(masked_scores(scores, state.cand)[0]))])
targets = np.array([-2.0])
loss, grads = loss_and_gradients(state, actions, targets, params, comm)
print(f"loss against target -2.0: {loss:.6f}")

# spot-check the most active theta6 coordinate against finite differences
h = 1e-6
name = "theta6"
i, j = np.unravel_index(np.abs(grads[name]).argmax(), grads[name].shape)


def loss_at(offset):
    bumped = params.copy()
    getattr(bumped, name)[i, j] += offset
    val, _ = loss_and_gradients(state, actions, targets, bumped, comm)
    return val


fd = (loss_at(h) - loss_at(-h)) / (2 * h)
print(f"d loss/d {name}[{i},{j}]: analytic {grads[name][i, j]:.8f}, "
      f"finite difference {fd:.8f}")

# --- a few Adam steps ----------------------------------------------------------

adam = AdamState.create(params, lr=1e-3)
for step in range(5):
    loss, grads = loss_and_gradients(state, actions, targets, params, comm)
    adam_step(params, grads, adam)
    print(f"step {adam.step}: loss {loss:.6f}")
