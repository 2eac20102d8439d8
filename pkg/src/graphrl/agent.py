"""Learning agent: epsilon-greedy acting, compact replay, training loop.

Replay tuples store only (graph index, solution bitset, action, target), so
buffer memory grows with N bits per tuple instead of the N^2 a stored
adjacency would cost; training batches regenerate their residual adjacency
slices on demand from the original graphs. All ranks share one seeded
decision stream, so sampled batches, exploration draws, and chosen actions
are identical everywhere by construction.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .env import MVC, MvcEnv, reset
from .errors import InvalidActionError
from .graphs import Graph
from .inference import SelectionSchedule, solve
from .policy import (AdamState, PolicyParams, adam_step, embed_forward,
                     loss_and_gradients, masked_scores, q_forward)
from .state import PartitionedState, Partition, partition_rows

log = logging.getLogger(__name__)


def pack_solution(solution_bits: np.ndarray) -> bytes:
    """Pack an N-long 0/1 vector into the compact snapshot bitset."""
    return np.packbits(np.asarray(solution_bits, dtype=np.uint8)).tobytes()


def unpack_solution(snapshot: bytes, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(snapshot, dtype=np.uint8))
    return bits[:n]


@dataclass(frozen=True)
class ExperienceTuple:
    """Memory-compact replay record; the snapshot is the pre-action S."""
    graph_index: int
    solution_snapshot: bytes
    action: int
    target_value: float

    def __post_init__(self):
        if not np.isfinite(self.target_value):
            raise ValueError("target_value must be finite")


class ReplayBuffer:
    """FIFO ring of experience tuples with capacity R."""

    def __init__(self, capacity: int = 50_000):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[ExperienceTuple] = []
        self._head = 0

    def add(self, item: ExperienceTuple) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._head] = item
            self._head = (self._head + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i: int) -> ExperienceTuple:
        # Index 0 is the oldest surviving tuple.
        return self._items[(self._head + i) % len(self._items)]

    def sample(self, rng: np.random.Generator, size: int) -> list[ExperienceTuple]:
        """Uniform without replacement; identical across ranks via shared rng."""
        if size > len(self):
            raise ValueError(f"cannot sample {size} from buffer of {len(self)}")
        idx = rng.choice(len(self), size=size, replace=False)
        return [self[int(i)] for i in idx]

    def approx_bytes(self) -> int:
        """In-process memory accounting: per-tuple payload plus object cost."""
        import sys
        if not self._items:
            return 0
        sample = self._items[0]
        per = (sys.getsizeof(sample) + sys.getsizeof(sample.solution_snapshot)
               + sys.getsizeof(sample.graph_index)
               + sys.getsizeof(sample.action)
               + sys.getsizeof(sample.target_value) + 8)  # +8: list slot
        return per * len(self._items)


@dataclass
class TrainConfig:
    """Hyper-parameters for DQN training; defaults follow the shipped setup.

    refresh_targets controls how sampled tuples are labelled: True (default)
    recomputes each Bellman target from the current parameters when the
    batch is drawn, False reuses the target stored at insertion time.
    Stored targets go stale as the value estimates move and measurably
    stall learning, so the default refreshes them; the stored value remains
    in the tuple either way.
    """
    embed_dim: int = 32
    num_layers: int = 2
    batch_size: int = 64
    tau: int = 4
    gamma: float = 0.9
    learning_rate: float = 1e-5
    replay_capacity: int = 50_000
    eps_start: float = 0.9
    eps_end: float = 0.1
    eps_decay_steps: int = 500
    eval_every: int = 10
    seed: int = 0
    init_scale: float = 0.05
    init_orientation: str = "positive"
    refresh_targets: bool = True

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        for name in ("eps_start", "eps_end"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.batch_size < 1 or self.eps_decay_steps < 1:
            raise ValueError("batch_size and eps_decay_steps must be >= 1")

    def epsilon_at(self, step: int) -> float:
        """Linear decay from eps_start to eps_end over eps_decay_steps."""
        frac = min(max(step, 0) / self.eps_decay_steps, 1.0)
        return self.eps_start + (self.eps_end - self.eps_start) * frac


@dataclass
class MetricsRow:
    step: int
    epsilon: float
    loss: float
    mean_approx_ratio: float
    cover_size_mean: float


def act(state: PartitionedState, params: PolicyParams, epsilon: float,
        rng: np.random.Generator, comm, slot: int = 0) -> int:
    """Epsilon-greedy node selection over the global candidate set.

    Exploration picks a uniform candidate through the shared rng (identical
    on every rank); exploitation takes the argmax of the gathered masked
    scores with ties broken by lowest node index.
    """
    if rng.random() < epsilon:
        cand_global = comm.all_gather(state.cand[slot], axis=-1, tag="select")
        idx = np.flatnonzero(cand_global)
        if idx.size == 0:
            raise InvalidActionError("no candidates left to explore")
        return int(idx[int(rng.integers(idx.size))])
    embed = embed_forward(state, params, comm)
    scores = q_forward(embed, state.cand, params, comm)
    masked = masked_scores(scores, state.cand)
    global_scores = comm.all_gather(masked, axis=-1, tag="select")[slot]
    if not np.any(np.isfinite(global_scores)):
        raise InvalidActionError("no candidates left to score")
    return int(np.argmax(global_scores))


def compute_target(reward: float, next_state: PartitionedState,
                   params: PolicyParams, comm, gamma: float,
                   slot: int = 0) -> float:
    """Bellman target: reward, plus gamma * max Q over next-state candidates."""
    counts = next_state.residual_counts(comm)
    if int(counts[slot]) == 0:
        return float(reward)
    embed = embed_forward(next_state, params, comm)
    scores = q_forward(embed, next_state.cand, params, comm)
    masked = masked_scores(scores, next_state.cand)
    global_scores = comm.all_gather(masked, axis=-1, tag="select")[slot]
    return float(reward) + gamma * float(np.max(global_scores))


def tuples_to_graphs(batch: list[ExperienceTuple], dataset: list[Graph],
                     part: Partition, dtype=np.float32) -> PartitionedState:
    """Regenerate the batch's residual adjacency slices from snapshots.

    Each tuple's residual state is the original graph with the snapshot's
    rows and columns zeroed, restricted to this rank's rows and stacked
    along the batch axis. All referenced graphs must share one node count.
    """
    if not batch:
        raise ValueError("empty tuple batch")
    graphs = [dataset[t.graph_index] for t in batch]
    n = graphs[0].num_nodes
    if any(g.num_nodes != n for g in graphs):
        raise ValueError("tuples reference graphs with mixed node counts")
    solutions = np.stack([unpack_solution(t.solution_snapshot, n) for t in batch])
    return PartitionedState(graphs, part, solutions=solutions, dtype=dtype,
                            graph_ids=[t.graph_index for t in batch])


def batch_targets(batch: list[ExperienceTuple], dataset: list[Graph],
                  params: PolicyParams, comm, part: Partition,
                  gamma: float) -> np.ndarray:
    """Bellman targets for a sampled batch under the current parameters.

    One batched forward over the post-action states; terminal transitions
    keep the bare reward.
    """
    n = dataset[batch[0].graph_index].num_nodes
    graphs = [dataset[t.graph_index] for t in batch]
    next_bits = []
    rewards = []
    for t in batch:
        bits = unpack_solution(t.solution_snapshot, n).copy()
        before = frozenset(int(v) for v in np.flatnonzero(bits))
        rewards.append(MVC.reward_rule(dataset[t.graph_index], before, t.action))
        bits[t.action] = 1
        next_bits.append(bits)
    next_state = PartitionedState(graphs, part, solutions=np.stack(next_bits),
                                  dtype=params.dtype)
    counts = next_state.residual_counts(comm)
    embed = embed_forward(next_state, params, comm)
    scores = q_forward(embed, next_state.cand, params, comm)
    gathered = comm.all_gather(masked_scores(scores, next_state.cand),
                               axis=-1, tag="select")
    rewards = np.asarray(rewards, dtype=params.dtype)
    max_q = gathered.max(axis=1)
    return np.where(counts == 0, rewards, rewards + gamma * max_q)


def train_step(buffer: ReplayBuffer, dataset: list[Graph],
               params: PolicyParams, adam: AdamState, cfg: TrainConfig,
               rng: np.random.Generator, comm,
               part: Partition) -> list[float]:
    """One sampled batch, tau successive (forward, backward, Adam) passes.

    Returns the tau losses; skips (returning []) while the buffer is still
    shorter than the batch size.
    """
    if len(buffer) < cfg.batch_size:
        log.debug("replay buffer underfull (%d < %d); skipping train step",
                  len(buffer), cfg.batch_size)
        return []
    batch = buffer.sample(rng, cfg.batch_size)
    state = tuples_to_graphs(batch, dataset, part, dtype=params.dtype)
    actions = np.array([t.action for t in batch], dtype=np.int64)
    if cfg.refresh_targets:
        targets = batch_targets(batch, dataset, params, comm, part,
                                cfg.gamma).astype(params.dtype)
    else:
        targets = np.array([t.target_value for t in batch], dtype=params.dtype)
    losses = []
    for _ in range(cfg.tau):
        loss, grads = loss_and_gradients(state, actions, targets, params, comm)
        adam_step(params, grads, adam)
        losses.append(loss)
    return losses


def evaluate_ratio(graphs: list[Graph], reference_sizes: list[int],
                   params: PolicyParams, comm) -> tuple[float, float]:
    """Mean approximation ratio and mean cover size on held-out graphs."""
    results = solve(graphs, params, comm, schedule=SelectionSchedule.single())
    sizes = [len(r.cover) for r in results]
    ratios = [s / ref for s, ref in zip(sizes, reference_sizes)]
    return float(np.mean(ratios)), float(np.mean(sizes))


def train(dataset: list[Graph], cfg: TrainConfig, comm,
          episodes: int | None = None, max_steps: int | None = None,
          eval_graphs: list[Graph] | None = None,
          reference_sizes: list[int] | None = None,
          params: PolicyParams | None = None,
          adam: AdamState | None = None,
          start_step: int = 0,
          probe: dict | None = None) -> tuple[PolicyParams, list[MetricsRow]]:
    """Episode/step training loop over a uniform-N graph dataset.

    Runs until the episode budget or step budget is exhausted (at least one
    must be given). Every cfg.eval_every steps the current policy solves the
    held-out graphs with single-node selection and the metrics log gains a
    (step, epsilon, loss, mean ratio, mean cover size) row.
    """
    if episodes is None and max_steps is None:
        raise ValueError("need an episode or step budget")
    if not dataset:
        raise ValueError("dataset is empty")
    n = dataset[0].num_nodes
    if any(g.num_nodes != n for g in dataset):
        raise ValueError("training dataset must have a uniform node count")
    if eval_graphs and reference_sizes is None:
        raise ValueError("eval_graphs need reference_sizes")

    part = partition_rows(n, comm.size)[comm.rank]
    if params is None:
        params = PolicyParams.initialize(cfg.embed_dim, cfg.num_layers,
                                         seed=cfg.seed, scale=cfg.init_scale,
                                         orientation=cfg.init_orientation)
    if adam is None:
        adam = AdamState.create(params, lr=cfg.learning_rate)
    buffer = ReplayBuffer(cfg.replay_capacity)
    decision_rng = np.random.default_rng([cfg.seed, start_step])
    metrics: list[MetricsRow] = []
    step = start_step
    episode = 0
    train_iterations = 0

    def budget_left() -> bool:
        if episodes is not None and episode >= episodes:
            return False
        if max_steps is not None and step >= start_step + max_steps:
            return False
        return True

    while budget_left():
        g_idx = int(decision_rng.integers(len(dataset)))
        env = reset(dataset[g_idx], comm, graph_id=g_idx)
        while not env.terminated and (max_steps is None
                                      or step < start_step + max_steps):
            eps = cfg.epsilon_at(step)
            snapshot = pack_solution_from_env(env)
            v = act(env.state, params, eps, decision_rng, comm)
            reward, _ = env.step(v)
            target = compute_target(reward, env.state, params, comm, cfg.gamma)
            buffer.add(ExperienceTuple(g_idx, snapshot, v, target))
            losses = train_step(buffer, dataset, params, adam, cfg,
                                decision_rng, comm, part)
            train_iterations += len(losses)
            step += 1
            if eval_graphs and step % cfg.eval_every == 0:
                ratio, cover_mean = evaluate_ratio(
                    eval_graphs, reference_sizes, params, comm)
                metrics.append(MetricsRow(
                    step=step, epsilon=eps,
                    loss=losses[-1] if losses else float("nan"),
                    mean_approx_ratio=ratio, cover_size_mean=cover_mean))
        episode += 1
    if probe is not None:
        probe["global_step"] = step
        probe["train_iterations"] = train_iterations
        probe["replay_bytes"] = buffer.approx_bytes()
        probe["replay_len"] = len(buffer)
        probe["adam_state"] = adam
    return params, metrics


def pack_solution_from_env(env: MvcEnv) -> bytes:
    bits = np.zeros(env.graph.num_nodes, dtype=np.uint8)
    for v in env.selected:
        bits[v] = 1
    return pack_solution(bits)
