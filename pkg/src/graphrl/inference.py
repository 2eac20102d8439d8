"""Parallel solution search: score, gather, pick top-d, repeat until covered.

The selection schedule shrinks d as the candidate set shrinks, so one policy
evaluation can commit several nodes early on while the endgame falls back to
single-node selection. Nodes invalidated by an earlier pick in the same
group are skipped via a small candidacy all-reduce (only the owner rank
holds a node's residual row).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidActionError
from .graphs import Graph
from .policy import PolicyParams, embed_forward, masked_scores, q_forward
from .state import PartitionedState, partition_rows


@dataclass(frozen=True)
class SelectionSchedule:
    """Candidate-fraction thresholds mapped to group sizes d.

    Walking the pairs in order, the first threshold with |C| > fraction * N
    decides d; below every threshold the fallback d applies. The default is
    the adaptive 8/4/2/1 ladder.
    """
    thresholds: tuple[tuple[float, int], ...] = ((0.5, 8), (0.25, 4), (0.125, 2))
    fallback_d: int = 1

    def __post_init__(self):
        fracs = [f for f, _ in self.thresholds]
        if any(f2 >= f1 for f1, f2 in zip(fracs, fracs[1:])):
            raise ValueError("thresholds must be strictly decreasing")
        ds = [d for _, d in self.thresholds] + [self.fallback_d]
        if any(d < 1 for d in ds):
            raise ValueError("every d must be >= 1")
        if any(d2 > d1 for d1, d2 in zip(ds, ds[1:])):
            raise ValueError("d values must be non-increasing")

    @classmethod
    def adaptive(cls) -> "SelectionSchedule":
        return cls()

    @classmethod
    def single(cls) -> "SelectionSchedule":
        return cls(thresholds=(), fallback_d=1)

    @classmethod
    def fixed(cls, d: int) -> "SelectionSchedule":
        return cls(thresholds=(), fallback_d=d)

    def d_for(self, num_candidates: int, num_nodes: int) -> int:
        for frac, d in self.thresholds:
            if num_candidates > frac * num_nodes:
                return d
        return self.fallback_d


def select_top_d(global_scores: np.ndarray, candidates: np.ndarray,
                 d: int) -> list[int]:
    """The min(d, |C|) candidate nodes with the highest scores.

    Returned in descending score order; ties broken by lowest node index.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    cand_idx = np.flatnonzero(np.asarray(candidates, dtype=bool))
    if cand_idx.size == 0:
        raise InvalidActionError("empty candidate set")
    order = np.argsort(-np.asarray(global_scores)[cand_idx], kind="stable")
    return [int(cand_idx[i]) for i in order[:min(d, cand_idx.size)]]


@dataclass
class SolveResult:
    """Solution and search statistics for one graph."""
    graph_id: int
    cover: list[int]
    policy_evals: int
    steps: int
    skipped: int = 0

    @property
    def cover_size(self) -> int:
        return len(self.cover)


def _solve_batch(graphs: list[Graph], params: PolicyParams, comm,
                 schedule: SelectionSchedule, graph_ids: list[int],
                 probe: dict | None = None) -> list[SolveResult]:
    n = graphs[0].num_nodes
    part = partition_rows(n, comm.size)[comm.rank]
    state = PartitionedState(graphs, part, graph_ids=graph_ids)
    batch = len(graphs)
    if probe is not None:
        probe.setdefault("adjacency_entries", 0)
        probe["adjacency_entries"] += int(state.local_residual.sum())
        probe.setdefault("batch_sizes", []).append(batch)
    active = state.residual_counts(comm) > 0
    covers: list[list[int]] = [[] for _ in range(batch)]
    evals = np.zeros(batch, dtype=np.int64)
    steps = np.zeros(batch, dtype=np.int64)
    skipped = np.zeros(batch, dtype=np.int64)

    while np.any(active):
        if probe is not None:
            probe["forward_calls"] = probe.get("forward_calls", 0) + 1
        embed = embed_forward(state, params, comm)
        scores = q_forward(embed, state.cand, params, comm)
        masked = masked_scores(scores, state.cand)
        global_scores = comm.all_gather(masked, axis=-1, tag="select")  # (B, N)
        picks_per_graph: list[list[int]] = []
        for b in range(batch):
            if not active[b]:
                picks_per_graph.append([])
                continue
            cand_mask = np.isfinite(global_scores[b])
            num_cand = int(np.count_nonzero(cand_mask))
            d = schedule.d_for(num_cand, n)
            picks_per_graph.append(select_top_d(global_scores[b], cand_mask, d))
            evals[b] += 1
            steps[b] += 1
        depth = max((len(p) for p in picks_per_graph), default=0)
        for j in range(depth):
            if j > 0:
                # A pick may have lost candidacy to an earlier pick in this
                # group; only its owner knows, so poll candidacy collectively.
                flags = np.zeros(batch, dtype=np.int64)
                for b in range(batch):
                    if j < len(picks_per_graph[b]):
                        v = picks_per_graph[b][j]
                        if part.owns(v):
                            v_loc = v - part.row_start
                            flags[b] = int(state.cand[b, v_loc])
                flags = comm.all_reduce_sum(flags, tag="select")
            for b in range(batch):
                if j >= len(picks_per_graph[b]):
                    continue
                v = picks_per_graph[b][j]
                if j > 0 and flags[b] == 0:
                    skipped[b] += 1
                    continue
                state.apply_action(v, slot=b)
                covers[b].append(v)
        active = state.residual_counts(comm) > 0

    return [SolveResult(graph_id=graph_ids[b], cover=sorted(covers[b]),
                        policy_evals=int(evals[b]), steps=int(steps[b]),
                        skipped=int(skipped[b]))
            for b in range(batch)]


def solve(graphs: list[Graph], params: PolicyParams, comm,
          schedule: SelectionSchedule | None = None,
          graph_ids: list[int] | None = None,
          probe: dict | None = None) -> list[SolveResult]:
    """Find a vertex cover for each graph with the trained (or any) policy.

    Graphs sharing a node count are batched and processed in lockstep;
    results come back in input order. Every returned cover is valid for its
    original edge set by construction (the loop stops only when the residual
    adjacency is empty).
    """
    if schedule is None:
        schedule = SelectionSchedule.adaptive()
    if graph_ids is None:
        graph_ids = list(range(len(graphs)))
    if len(graph_ids) != len(graphs):
        raise ValueError("graph_ids must match graphs")
    by_n: dict[int, list[int]] = {}
    for i, g in enumerate(graphs):
        by_n.setdefault(g.num_nodes, []).append(i)
    results: dict[int, SolveResult] = {}
    for n in sorted(by_n):
        idxs = by_n[n]
        batch_results = _solve_batch([graphs[i] for i in idxs], params, comm,
                                     schedule, [graph_ids[i] for i in idxs],
                                     probe=probe)
        for i, res in zip(idxs, batch_results):
            results[i] = res
    return [results[i] for i in range(len(graphs))]
