"""Graph container, generators, and edge-list file format."""
import numpy as np
import pytest

from graphrl import DataError, Graph, generate_ba, generate_er, load_edge_list, write_edge_list

from reference import neighbor_sets


class TestGraph:
    def test_rejects_self_loops(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(3, [(1, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph(3, [(0, 3)])

    def test_duplicate_edges_collapse(self):
        g = Graph(3, [(0, 1), (1, 0), (0, 1)])
        assert g.num_edges == 1

    def test_adjacency_is_symmetric(self):
        g = Graph(4, [(0, 1), (2, 3), (1, 3)])
        rows, cols = g.adjacency_coo()
        entries = set(zip(rows.tolist(), cols.tolist()))
        assert len(entries) == 2 * g.num_edges
        assert all((c, r) in entries for r, c in entries)

    def test_degrees(self):
        g = Graph(4, [(0, 1), (0, 2), (0, 3)])
        assert g.degrees().tolist() == [3, 1, 1, 1]


class TestErdosRenyi:
    def test_rho_zero_has_no_edges(self):
        assert generate_er(4, 0.0, 7).num_edges == 0

    def test_rho_one_is_complete(self):
        g = generate_er(4, 1.0, 7)
        assert g.num_edges == 6

    def test_edge_count_near_binomial_mean(self):
        # mean = 0.15 * 1000 * 999 / 2 = 74925; each seed should land
        # within 5% (the binomial sd is ~252, far inside that band)
        mean = 0.15 * 1000 * 999 / 2
        for seed in (0, 1, 2):
            count = generate_er(1000, 0.15, seed).num_edges
            assert abs(count - mean) / mean < 0.05

    def test_deterministic_per_seed(self):
        a = generate_er(50, 0.2, 123)
        b = generate_er(50, 0.2, 123)
        c = generate_er(50, 0.2, 124)
        assert a == b
        assert a != c

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            generate_er(0, 0.5, 1)
        with pytest.raises(ValueError):
            generate_er(5, 1.5, 1)


class TestBarabasiAlbert:
    def test_d_equals_existing_count_builds_complete_core(self):
        # n = d + 1: the one added node connects to the whole initial
        # clique, so the result contains (here: is) K5
        g = generate_ba(5, 4, seed=11)
        assert g.num_edges == 10

    def test_edge_count_from_initial_condition(self):
        # clique on d nodes plus d edges per added node:
        # C(4,2) + 4 * 96 = 390
        g = generate_ba(100, 4, seed=3)
        assert g.num_edges == 6 + 4 * 96
        # direct construction check: every non-seed node has exactly d
        # neighbors among earlier nodes
        adj = neighbor_sets(g.num_nodes, g.edge_array)
        for node in range(4, 100):
            earlier = [u for u in adj[node] if u < node]
            assert len(earlier) == 4

    def test_two_nodes_single_edge(self):
        g = generate_ba(2, 1, seed=0)
        assert g.num_edges == 1
        assert g.edge_set() == {(0, 1)}

    def test_invalid_ordering(self):
        with pytest.raises(ValueError):
            generate_ba(4, 4, seed=0)
        with pytest.raises(ValueError):
            generate_ba(4, 0, seed=0)

    def test_deterministic_per_seed(self):
        assert generate_ba(60, 3, seed=5) == generate_ba(60, 3, seed=5)
        assert generate_ba(60, 3, seed=5) != generate_ba(60, 3, seed=6)


class TestEdgeListFiles:
    def test_basic_path(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n1 2\n")
        g = load_edge_list(f)
        assert g.num_nodes == 3
        assert g.edge_set() == {(0, 1), (1, 2)}

    def test_self_loop_dropped(self, tmp_path, caplog):
        f = tmp_path / "g.txt"
        f.write_text("# nodes=2 edges=0 seed=0\n1 1\n")
        with caplog.at_level("WARNING"):
            g = load_edge_list(f)
        assert g.num_edges == 0
        assert "self-loop" in caplog.text

    def test_duplicates_dropped(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n1 0\n0 1\n")
        assert load_edge_list(f).num_edges == 1

    def test_header_overrides_node_count(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("# nodes=10 edges=1 seed=3\n0 1\n")
        assert load_edge_list(f).num_nodes == 10

    def test_unparsable_line_names_line_number(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\nnot an edge\n")
        with pytest.raises(DataError, match=":2:"):
            load_edge_list(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_edge_list(tmp_path / "absent.txt")

    def test_roundtrip(self, tmp_path):
        g = generate_er(30, 0.2, 9)
        f = tmp_path / "g.txt"
        write_edge_list(g, f, seed=9)
        loaded = load_edge_list(f)
        assert loaded == g
        assert f.read_text().splitlines()[0] == \
            f"# nodes=30 edges={g.num_edges} seed=9"
