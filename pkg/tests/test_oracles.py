"""Exact branch-and-bound against exhaustive search, plus the baselines."""
import numpy as np
import pytest

from graphrl import (CoverResult, Graph, approx_ratio, exact_mvc, generate_er,
                     is_vertex_cover, matching_lower_bound, reference_for,
                     two_approx_mvc)

from reference import exhaustive_mvc_size

TRIANGLE = Graph(3, [(0, 1), (1, 2), (0, 2)])
STAR10 = Graph(10, [(0, i) for i in range(1, 10)])
PETERSEN = Graph(10, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4),
                      (5, 7), (7, 9), (9, 6), (6, 8), (8, 5),
                      (0, 5), (1, 6), (2, 7), (3, 8), (4, 9)])


class TestExactMvc:
    def test_triangle(self):
        res = exact_mvc(TRIANGLE)
        assert res.size == 2
        assert res.exact
        assert is_vertex_cover(TRIANGLE, res.cover)

    def test_star_takes_only_the_center(self):
        res = exact_mvc(STAR10)
        assert res.size == 1
        assert res.cover == frozenset({0})

    def test_petersen_graph(self):
        res = exact_mvc(PETERSEN)
        assert res.size == 6
        assert res.size == exhaustive_mvc_size(10, PETERSEN.edge_array)
        assert is_vertex_cover(PETERSEN, res.cover)

    def test_edgeless_graph(self):
        assert exact_mvc(Graph(4)).size == 0

    def test_matches_exhaustive_search_on_random_graphs(self):
        rng = np.random.default_rng(0)
        for trial in range(40):
            n = int(rng.integers(3, 13))
            g = generate_er(n, float(rng.uniform(0.15, 0.6)),
                            int(rng.integers(1 << 30)))
            res = exact_mvc(g)
            assert res.size == exhaustive_mvc_size(n, g.edge_array), \
                f"trial {trial}: n={n}"
            assert is_vertex_cover(g, res.cover)

    def test_refuses_oversized_graphs(self):
        big = generate_er(50, 0.1, 0)
        with pytest.raises(ValueError, match="matching_lower_bound"):
            exact_mvc(big)
        assert exact_mvc(big, node_limit=64).exact


class TestTwoApprox:
    def test_perfect_matching_graph(self):
        g = Graph(6, [(0, 1), (2, 3), (4, 5)])
        res = two_approx_mvc(g)
        assert res.size == 6
        assert not res.exact
        assert exact_mvc(g).size == 3

    def test_star_pays_the_factor_two(self):
        res = two_approx_mvc(STAR10)
        assert res.size == 2
        assert is_vertex_cover(STAR10, res.cover)

    def test_empty_graph(self):
        assert two_approx_mvc(Graph(3)).size == 0

    def test_within_factor_two_of_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            g = generate_er(int(rng.integers(4, 16)),
                            float(rng.uniform(0.1, 0.5)),
                            int(rng.integers(1 << 30)))
            approx = two_approx_mvc(g)
            exact = exact_mvc(g)
            assert is_vertex_cover(g, approx.cover)
            assert approx.size <= 2 * exact.size


class TestMatchingBound:
    def test_lower_bounds_exact_cover(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            g = generate_er(int(rng.integers(2, 16)),
                            float(rng.uniform(0.1, 0.5)),
                            int(rng.integers(1 << 30)))
            assert matching_lower_bound(g) <= exact_mvc(g).size

    def test_reference_for_picks_exact_when_small(self):
        assert reference_for(TRIANGLE).exact
        big = generate_er(80, 0.05, 3)
        ref = reference_for(big)
        assert not ref.exact
        assert ref.is_bound
        assert ref.size == matching_lower_bound(big)


class TestApproxRatio:
    def test_identical_covers_score_one(self):
        res = exact_mvc(TRIANGLE)
        assert approx_ratio(res, res, graph=TRIANGLE) == 1.0

    def test_plain_division(self):
        a = CoverResult(frozenset(range(12)), 12, "solve", exact=False)
        b = CoverResult(frozenset(range(10)), 10, "branch-and-bound",
                        exact=True)
        assert approx_ratio(a, b) == pytest.approx(1.2)

    def test_invalid_cover_rejected(self):
        bogus = CoverResult(frozenset({0}), 1, "solve", exact=False)
        ref = exact_mvc(TRIANGLE)
        with pytest.raises(ValueError, match="not a vertex cover"):
            approx_ratio(bogus, ref, graph=TRIANGLE)

    def test_bound_reference_skips_cover_validation(self):
        g = generate_er(60, 0.08, 5)
        ref = reference_for(g)
        cover = two_approx_mvc(g)
        ratio = approx_ratio(cover, ref, graph=g)
        assert ratio >= 1.0
