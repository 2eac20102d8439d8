"""Undirected graphs: container, random generators, and edge-list files."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError

log = logging.getLogger(__name__)

# Rows of ER pair-probabilities drawn per chunk; keeps peak memory bounded
# without changing the draw order for a given (n, rho, seed).
_ER_CHUNK_PAIRS = 2_000_000


class Graph:
    """Immutable undirected graph with unit edge weights.

    Edges are stored once as (u, v) pairs with u < v; the symmetric COO
    adjacency (2 entries per edge, implicit value 1.0) is derived on demand.
    """

    __slots__ = ("num_nodes", "_edges")

    def __init__(self, num_nodes: int, edges=()):
        if num_nodes < 1:
            raise ValueError(f"num_nodes must be >= 1, got {num_nodes}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("edges must be a sequence of (u, v) pairs")
        if arr.size and (arr.min() < 0 or arr.max() >= num_nodes):
            raise ValueError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) if arr.size else arr
        self.num_nodes = int(num_nodes)
        self._edges = pairs
        self._edges.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return int(self._edges.shape[0])

    @property
    def edge_array(self) -> np.ndarray:
        """(E, 2) int64 array with u < v, lexicographically sorted."""
        return self._edges

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self._edges}

    def adjacency_coo(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric coordinate adjacency: (rows, cols), 2 entries per edge."""
        u, v = self._edges[:, 0], self._edges[:, 1]
        return np.concatenate([u, v]), np.concatenate([v, u])

    def csr(self, dtype=np.float32) -> sp.csr_matrix:
        rows, cols = self.adjacency_coo()
        data = np.ones(len(rows), dtype=dtype)
        return sp.csr_matrix((data, (rows, cols)),
                             shape=(self.num_nodes, self.num_nodes))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        rows, _ = self.adjacency_coo()
        np.add.at(deg, rows, 1)
        return deg

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and np.array_equal(self._edges, other._edges))

    def __hash__(self):
        return hash((self.num_nodes, self._edges.tobytes()))

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


def generate_er(n: int, rho: float, seed: int) -> Graph:
    """Erdos-Renyi graph: each unordered pair is an edge with probability rho.

    Deterministic for a fixed (n, rho, seed). Pair probabilities are drawn
    row by row (u ascending, then v > u) in fixed-size chunks.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    rng = np.random.default_rng(seed)
    edges_u: list[np.ndarray] = []
    edges_v: list[np.ndarray] = []
    start = 0
    while start < n - 1:
        # rows [start, stop) such that the chunk has at most _ER_CHUNK_PAIRS pairs
        stop, pairs = start, 0
        while stop < n - 1 and pairs + (n - stop - 1) <= _ER_CHUNK_PAIRS:
            pairs += n - stop - 1
            stop += 1
        stop = max(stop, start + 1)
        for u in range(start, stop):
            draws = rng.random(n - u - 1)
            hit = np.flatnonzero(draws < rho)
            if hit.size:
                edges_u.append(np.full(hit.size, u, dtype=np.int64))
                edges_v.append(hit + u + 1)
        start = stop
    if edges_u:
        pairs_arr = np.stack([np.concatenate(edges_u), np.concatenate(edges_v)], axis=1)
    else:
        pairs_arr = np.empty((0, 2), dtype=np.int64)
    return Graph(n, pairs_arr)


def generate_ba(n: int, d: int, seed: int) -> Graph:
    """Preferential-attachment graph: each new node brings d edges.

    Initial condition: the first d nodes form a clique; the first added node
    (node d) connects to all of them, and every later node picks d distinct
    existing nodes with probability proportional to their current degree.
    Edge count is therefore exactly C(d, 2) + d * (n - d).
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if n <= d:
        raise ValueError(f"need n > d, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = [(i, j) for i in range(d) for j in range(i + 1, d)]
    # one entry per unit of degree; sampling an index uniformly is
    # preferential attachment
    repeated: list[int] = []
    for u, v in edges:
        repeated.append(u)
        repeated.append(v)
    for node in range(d, n):
        if node == d:
            targets = list(range(d))
        else:
            chosen: set[int] = set()
            while len(chosen) < d:
                chosen.add(repeated[int(rng.integers(len(repeated)))])
            targets = sorted(chosen)
        for t in targets:
            edges.append((t, node))
            repeated.append(t)
            repeated.append(node)
    return Graph(n, edges)


def load_edge_list(path) -> Graph:
    """Read a whitespace-separated "u v" edge-list file.

    Lines starting with '#' are comments; a comment carrying "nodes=N"
    overrides the node count (otherwise max index + 1). Self-loops and
    duplicate edges are dropped with a warning count. A line that does not
    parse as two integers raises DataError naming the line number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"edge-list file not found: {path}")
    header_nodes = None
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    self_loops = 0
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].replace(",", " ").split():
                    if token.startswith("nodes="):
                        try:
                            header_nodes = int(token[len("nodes="):])
                        except ValueError:
                            raise DataError(
                                f"{path}:{lineno}: bad nodes= header: {token!r}"
                            ) from None
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: non-integer endpoint in {line!r}"
                ) from None
            if u < 0 or v < 0:
                raise DataError(f"{path}:{lineno}: negative node index in {line!r}")
            if u == v:
                self_loops += 1
                continue
            key = (min(u, v), max(u, v))
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            pairs.append(key)
    if self_loops or duplicates:
        log.warning("%s: dropped %d self-loop(s) and %d duplicate edge(s)",
                    path, self_loops, duplicates)
    if header_nodes is not None:
        num_nodes = header_nodes
    elif pairs:
        num_nodes = max(max(p) for p in pairs) + 1
    else:
        raise DataError(f"{path}: no edges and no 'nodes=' header")
    return Graph(num_nodes, pairs)


def write_edge_list(graph: Graph, path, seed=None) -> None:
    """Write the generator CLI format: header line plus one "u v" per edge."""
    path = Path(path)
    seed_txt = "none" if seed is None else str(seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes={graph.num_nodes} edges={graph.num_edges} seed={seed_txt}\n")
        for u, v in graph.edge_array:
            fh.write(f"{u} {v}\n")
