"""Reference solvers for solution quality: exact search and a 2-approximation.

The exact solver is a branch-and-bound with degree-1 reduction, max-degree
branching, and a maximal-matching lower bound for pruning; it replaces an
external ILP solver for graphs up to a configurable size. For larger graphs
the matching size itself serves as a lower-bound reference, which makes
reported ratios upper bounds on the true approximation ratio.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph

EXACT_NODE_LIMIT = 40


@dataclass(frozen=True)
class CoverResult:
    """A vertex cover (or a size-only lower bound) with provenance."""
    cover: frozenset
    size: int
    method: str
    exact: bool

    @property
    def is_bound(self) -> bool:
        """True for size-only references that are not themselves covers."""
        return self.method == "matching-bound"


def is_vertex_cover(graph: Graph, cover) -> bool:
    cover = set(int(v) for v in cover)
    return all(u in cover or v in cover for u, v in graph.edge_array)


def _adjacency_sets(graph: Graph) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(graph.num_nodes)]
    for u, v in graph.edge_array:
        adj[int(u)].add(int(v))
        adj[int(v)].add(int(u))
    return adj


def _greedy_matching_size(adj: list[set[int]]) -> int:
    """Greedy maximal matching on adjacency sets (lowest-index first)."""
    matched = [False] * len(adj)
    size = 0
    for u in range(len(adj)):
        if matched[u]:
            continue
        for v in sorted(adj[u]):
            if not matched[v]:
                matched[u] = matched[v] = True
                size += 1
                break
    return size


def matching_lower_bound(graph: Graph) -> int:
    """|maximal matching| <= minimum vertex cover size."""
    return _greedy_matching_size(_adjacency_sets(graph))


def two_approx_mvc(graph: Graph) -> CoverResult:
    """Endpoints of a greedy maximal matching: size <= 2 * optimum."""
    adj = _adjacency_sets(graph)
    matched = [False] * graph.num_nodes
    cover: set[int] = set()
    for u in range(graph.num_nodes):
        if matched[u]:
            continue
        for v in sorted(adj[u]):
            if not matched[v]:
                matched[u] = matched[v] = True
                cover.update((u, v))
                break
    return CoverResult(frozenset(cover), len(cover), "two-approx", exact=False)


def exact_mvc(graph: Graph, node_limit: int = EXACT_NODE_LIMIT) -> CoverResult:
    """Minimum vertex cover by branch and bound.

    Refuses graphs above node_limit; use matching_lower_bound and label the
    resulting ratios as upper bounds instead.
    """
    if graph.num_nodes > node_limit:
        raise ValueError(
            f"graph has {graph.num_nodes} nodes, above the exact limit "
            f"{node_limit}; use matching_lower_bound for a reference")
    adj = _adjacency_sets(graph)
    best_cover = set(two_approx_mvc(graph).cover)
    best_size = len(best_cover)

    def search(active: list[set[int]], chosen: set[int]) -> None:
        nonlocal best_cover, best_size
        chosen = set(chosen)
        active = [set(s) for s in active]

        def take(v: int) -> None:
            for u in active[v]:
                active[u].discard(v)
            active[v] = set()
            chosen.add(v)

        # Degree-1 reduction: a pendant edge is always covered by the
        # non-leaf endpoint of some optimal cover.
        changed = True
        while changed:
            changed = False
            for v in range(len(active)):
                if len(active[v]) == 1:
                    take(next(iter(active[v])))
                    changed = True
        degrees = [len(s) for s in active]
        if max(degrees, default=0) == 0:
            if len(chosen) < best_size:
                best_size = len(chosen)
                best_cover = set(chosen)
            return
        if len(chosen) + _greedy_matching_size(active) >= best_size:
            return
        v = int(np.argmax(degrees))
        # Branch A: v in the cover.
        branch_a = [set(s) for s in active]
        for u in branch_a[v]:
            branch_a[u].discard(v)
        branch_a[v] = set()
        search(branch_a, chosen | {v})
        # Branch B: v excluded, so all its neighbors are in.
        branch_b = [set(s) for s in active]
        taken = set(branch_b[v])
        for u in taken:
            for w in branch_b[u]:
                branch_b[w].discard(u)
            branch_b[u] = set()
        search(branch_b, chosen | taken)

    search(adj, set())
    return CoverResult(frozenset(best_cover), best_size, "branch-and-bound",
                       exact=True)


def approx_ratio(cover: CoverResult, reference: CoverResult,
                 graph: Graph | None = None) -> float:
    """|cover| / |reference|; >= 1.0 whenever the reference is exact.

    When a graph is supplied, both results that claim to be covers are
    validated against it; an invalid cover raises.
    """
    if reference.size <= 0:
        raise ValueError("reference size must be positive")
    if graph is not None:
        if not is_vertex_cover(graph, cover.cover):
            raise ValueError(f"{cover.method} result is not a vertex cover")
        if not reference.is_bound and not is_vertex_cover(graph, reference.cover):
            raise ValueError(f"{reference.method} reference is not a vertex cover")
    return cover.size / reference.size


def reference_for(graph: Graph, node_limit: int = EXACT_NODE_LIMIT) -> CoverResult:
    """Exact cover when the graph is small enough, else the matching bound."""
    if graph.num_nodes <= node_limit:
        return exact_mvc(graph, node_limit)
    return CoverResult(frozenset(), matching_lower_bound(graph),
                       "matching-bound", exact=False)
