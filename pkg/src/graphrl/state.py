"""Row-partitioned graph state: residual adjacency, candidates, solutions.

Each worker owns a contiguous block of node rows for a batch of same-size
graphs. The residual adjacency keeps the original sparsity structure and
zeroes values as solution rows/columns are removed, so row and column
deletion are O(degree) and the sparse products used by the policy stay on
one fixed CSR matrix per batch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidActionError
from .graphs import Graph


@dataclass(frozen=True)
class Partition:
    """The block of node rows owned by one rank."""
    rank: int
    num_workers: int
    row_start: int
    row_stop: int

    @property
    def num_rows(self) -> int:
        return self.row_stop - self.row_start

    def owns(self, node: int) -> bool:
        return self.row_start <= node < self.row_stop


def partition_rows(n: int, p: int) -> list[Partition]:
    """Balanced block partition of node rows [0, n) over p ranks.

    The first n % p ranks get one extra row, so block sizes differ by at
    most 1 and their union is exactly [0, n).
    """
    if p < 1:
        raise ValueError(f"worker count must be >= 1, got {p}")
    if p > n:
        raise ValueError(f"more workers ({p}) than nodes ({n})")
    base, extra = divmod(n, p)
    parts = []
    start = 0
    for rank in range(p):
        stop = start + base + (1 if rank < extra else 0)
        parts.append(Partition(rank, p, start, stop))
        start = stop
    return parts


class PartitionedState:
    """One rank's slice of state for a batch of B graphs with equal N.

    Holds the local residual adjacency A (rows owned by this rank, all N
    columns, stacked block-diagonally over the batch), the local candidate
    vector C, and the local partial solution S. All mutation happens through
    apply_action, invoked in lockstep by every rank with the same node.
    """

    def __init__(self, graphs: list[Graph], part: Partition,
                 solutions: np.ndarray | None = None, dtype=np.float32,
                 graph_ids: list[int] | None = None):
        if not graphs:
            raise ValueError("need at least one graph")
        n = graphs[0].num_nodes
        if any(g.num_nodes != n for g in graphs):
            raise ValueError("all graphs in a batch must have the same node count")
        batch = len(graphs)
        self.part = part
        self.num_nodes = n
        self.batch = batch
        self.graph_ids = list(graph_ids) if graph_ids is not None else list(range(batch))
        self.dtype = np.dtype(dtype)

        rows = part.num_rows
        if solutions is None:
            solutions = np.zeros((batch, n), dtype=np.uint8)
        else:
            solutions = np.asarray(solutions, dtype=np.uint8)
            if solutions.shape != (batch, n):
                raise ValueError(
                    f"solutions must be (B, N) = ({batch}, {n}), got {solutions.shape}")

        blk_rows: list[np.ndarray] = []
        blk_cols: list[np.ndarray] = []
        blk_vals: list[np.ndarray] = []
        for b, g in enumerate(graphs):
            r, c = g.adjacency_coo()
            local = (r >= part.row_start) & (r < part.row_stop)
            r, c = r[local], c[local]
            keep = (solutions[b, r] == 0) & (solutions[b, c] == 0)
            vals = keep.astype(self.dtype)
            blk_rows.append(r - part.row_start + b * rows)
            blk_cols.append(c + b * n)
            blk_vals.append(vals)
        rows_all = np.concatenate(blk_rows) if blk_rows else np.empty(0, np.int64)
        cols_all = np.concatenate(blk_cols) if blk_cols else np.empty(0, np.int64)
        vals_all = np.concatenate(blk_vals) if blk_vals else np.empty(0, self.dtype)
        self._mat = sp.csr_matrix((vals_all, (rows_all, cols_all)),
                                  shape=(batch * rows, batch * n))
        self._build_column_lookup()

        self.sol = solutions[:, part.row_start:part.row_stop].copy()
        deg = self.local_degrees()
        self.cand = ((deg > 0) & (self.sol == 0)).astype(np.uint8)
        self.local_residual = self._count_residual()

    # -- construction helpers ------------------------------------------------

    def _build_column_lookup(self) -> None:
        indices = self._mat.indices
        order = np.argsort(indices, kind="stable")
        counts = np.bincount(indices, minlength=self._mat.shape[1])
        ptr = np.zeros(self._mat.shape[1] + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        self._col_order = order
        self._col_ptr = ptr

    def _count_residual(self) -> np.ndarray:
        rows = self.part.num_rows
        counts = np.zeros(self.batch, dtype=np.int64)
        indptr = self._mat.indptr
        data = self._mat.data
        for b in range(self.batch):
            lo, hi = indptr[b * rows], indptr[(b + 1) * rows]
            counts[b] = int(np.count_nonzero(data[lo:hi]))
        return counts

    def _column_data_indices(self, b: int, node: int) -> np.ndarray:
        col = b * self.num_nodes + node
        return self._col_order[self._col_ptr[col]:self._col_ptr[col + 1]]

    # -- views ----------------------------------------------------------------

    def local_degrees(self) -> np.ndarray:
        """(B, rows) residual degree of each locally owned node."""
        sums = np.asarray(self._mat.sum(axis=1)).ravel()
        return sums.reshape(self.batch, self.part.num_rows)

    def local_residual_coo(self, slot: int) -> tuple[np.ndarray, np.ndarray]:
        """Surviving (global row, col) entries of one graph's local slice."""
        rows = self.part.num_rows
        coo = self._mat.tocoo()
        keep = coo.data != 0
        r, c = coo.row[keep], coo.col[keep]
        mine = (r // rows) == slot
        return (r[mine] % rows + self.part.row_start,
                c[mine] % self.num_nodes)

    # -- policy-facing sparse products -----------------------------------------

    def spmm(self, h_local: np.ndarray) -> np.ndarray:
        """(B, K, rows) @ A_local -> (B, K, N) partial neighbor sums."""
        b, k, rows = h_local.shape
        flat = h_local.transpose(1, 0, 2).reshape(k, b * rows)
        out = flat @ self._mat
        return out.reshape(k, b, self.num_nodes).transpose(1, 0, 2)

    def spmm_t(self, m_full: np.ndarray) -> np.ndarray:
        """(B, K, N) @ A_local^T -> (B, K, rows)."""
        b, k, n = m_full.shape
        flat = m_full.transpose(1, 0, 2).reshape(k, b * n)
        out = flat @ self._mat.T
        return out.reshape(k, b, self.part.num_rows).transpose(1, 0, 2)

    # -- mutation ----------------------------------------------------------------

    def apply_action(self, v: int, slot: int = 0) -> None:
        """Move node v into the partial solution of one batched graph.

        Zeroes v's row (owner rank) and column (all ranks) in the residual
        adjacency, then refreshes the candidate vector: nodes keep candidacy
        only while they have residual degree >= 1 and are outside S.
        Validation is owner-side: only the owner holds v's row and S entry.
        """
        if not 0 <= v < self.num_nodes:
            raise InvalidActionError(f"node {v} out of range [0, {self.num_nodes})")
        if not 0 <= slot < self.batch:
            raise InvalidActionError(f"batch slot {slot} out of range")
        rows = self.part.num_rows
        data = self._mat.data
        indptr = self._mat.indptr
        removed = 0
        if self.part.owns(v):
            v_loc = v - self.part.row_start
            if self.sol[slot, v_loc]:
                raise InvalidActionError(f"node {v} is already in the solution")
            if not self.cand[slot, v_loc]:
                raise InvalidActionError(f"node {v} is not a candidate")
            r = slot * rows + v_loc
            row_span = slice(indptr[r], indptr[r + 1])
            removed += int(np.count_nonzero(data[row_span]))
            data[row_span] = 0
            self.sol[slot, v_loc] = 1
            self.cand[slot, v_loc] = 0
        col_idx = self._column_data_indices(slot, v)
        removed += int(np.count_nonzero(data[col_idx]))
        data[col_idx] = 0
        self.local_residual[slot] -= removed

        lo, hi = slot * rows, (slot + 1) * rows
        row_sums = np.asarray(self._mat[lo:hi].sum(axis=1)).ravel()
        self.cand[slot] = ((row_sums > 0) & (self.sol[slot] == 0)).astype(np.uint8)

    # -- termination ---------------------------------------------------------------

    def residual_counts(self, comm) -> np.ndarray:
        """(B,) global residual adjacency entry counts (sum-all-reduce)."""
        return comm.all_reduce_sum(self.local_residual, tag="env")

    def is_covered(self, slot: int, comm) -> bool:
        """True iff the residual adjacency of one graph is empty on all ranks."""
        if not 0 <= slot < self.batch:
            raise InvalidActionError(f"batch slot {slot} out of range")
        return int(self.residual_counts(comm)[slot]) == 0


def apply_action(state: PartitionedState, v: int, slot: int = 0) -> PartitionedState:
    """Module-level alias; mutates and returns the state."""
    state.apply_action(v, slot)
    return state


def is_covered(state: PartitionedState, slot: int, comm) -> bool:
    return state.is_covered(slot, comm)
