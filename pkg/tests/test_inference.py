"""Top-d selection, the adaptive schedule, and end-to-end solving."""
import numpy as np
import pytest

from graphrl import (Graph, InvalidActionError, PolicyParams,
                     SelectionSchedule, generate_er, is_vertex_cover, reset,
                     run_workers, select_top_d, solve)

from reference import covers_all_edges


class TestSelectionSchedule:
    def test_default_ladder(self):
        sched = SelectionSchedule.adaptive()
        n = 1000
        assert sched.d_for(501, n) == 8
        assert sched.d_for(500, n) == 4  # exactly n/2 is not "larger than"
        assert sched.d_for(251, n) == 4
        assert sched.d_for(250, n) == 2
        assert sched.d_for(126, n) == 2
        assert sched.d_for(125, n) == 1
        assert sched.d_for(1, n) == 1

    def test_fixed_one_is_degenerate(self):
        sched = SelectionSchedule.single()
        assert sched.d_for(999, 1000) == 1

    def test_validation(self):
        with pytest.raises(ValueError, match="decreasing"):
            SelectionSchedule(thresholds=((0.25, 4), (0.5, 8)))
        with pytest.raises(ValueError, match="non-increasing"):
            SelectionSchedule(thresholds=((0.5, 2), (0.25, 4)))
        with pytest.raises(ValueError, match=">= 1"):
            SelectionSchedule(thresholds=((0.5, 0),))


class TestSelectTopD:
    def test_tie_broken_by_lowest_index(self):
        scores = np.array([5.0, 1.0, 9.0, 9.0])
        cand = np.array([1, 0, 1, 1], dtype=bool)
        assert select_top_d(scores, cand, 2) == [2, 3]

    def test_d_one_is_argmax_over_candidates(self):
        scores = np.array([9.0, 5.0, 7.0])
        cand = np.array([0, 1, 1], dtype=bool)
        assert select_top_d(scores, cand, 1) == [2]

    def test_d_at_least_candidate_count_returns_all(self):
        scores = np.array([3.0, 2.0, 1.0, 0.0])
        cand = np.array([1, 1, 0, 1], dtype=bool)
        assert select_top_d(scores, cand, 10) == [0, 1, 3]

    def test_descending_score_order(self):
        scores = np.array([1.0, 4.0, 2.0, 3.0])
        cand = np.ones(4, dtype=bool)
        assert select_top_d(scores, cand, 3) == [1, 3, 2]

    def test_empty_candidates_raise(self):
        with pytest.raises(InvalidActionError, match="empty"):
            select_top_d(np.zeros(3), np.zeros(3, dtype=bool), 1)


class TestSolve:
    def test_edgeless_graph_needs_no_policy_evaluations(self):
        params = PolicyParams.initialize(4, 2, seed=0)

        def worker(comm):
            return solve([Graph(6)], params, comm)
        (res,) = run_workers(1, worker)[0]
        assert res.cover == []
        assert res.policy_evals == 0

    def test_every_output_is_a_valid_cover(self):
        # any parameters, trained or not, must still yield a vertex cover
        params = PolicyParams.initialize(8, 2, seed=5)
        graphs = [generate_er(20, 0.2, 400 + i) for i in range(4)]

        def worker(comm):
            return solve(graphs, params, comm)
        for res, g in zip(run_workers(2, worker)[0], graphs):
            assert covers_all_edges(g.edge_array, res.cover)
            assert res.cover == sorted(res.cover)

    def test_d1_schedule_reproduces_stepwise_argmax_trajectory(self):
        g = generate_er(14, 0.3, 9)
        params = PolicyParams.initialize(8, 2, seed=1)

        def manual(comm):
            from graphrl import embed_forward, masked_scores, q_forward
            env = reset(g, comm)
            picks = []
            while not env.terminated:
                embed = embed_forward(env.state, params, comm)
                scores = q_forward(embed, env.state.cand, params, comm)
                gl = comm.all_gather(masked_scores(scores, env.state.cand),
                                     axis=-1)[0]
                v = int(np.argmax(gl))
                env.step(v)
                picks.append(v)
            return picks

        def via_solve(comm):
            (res,) = solve([g], params, comm,
                           schedule=SelectionSchedule.single())
            return res
        picks = run_workers(1, manual)[0]
        res = run_workers(1, via_solve)[0]
        assert res.cover == sorted(picks)
        assert res.policy_evals == len(picks)
        assert res.steps == len(picks)

    def test_adaptive_uses_fewer_policy_evaluations(self):
        g = generate_er(64, 0.15, 11)
        params = PolicyParams.initialize(8, 2, seed=2)

        def worker(comm):
            (single,) = solve([g], params, comm,
                              schedule=SelectionSchedule.single())
            (multi,) = solve([g], params, comm,
                             schedule=SelectionSchedule.adaptive())
            return single, multi
        single, multi = run_workers(1, worker)[0]
        assert covers_all_edges(g.edge_array, multi.cover)
        assert multi.policy_evals < single.policy_evals

    def test_mid_group_invalidated_pick_is_skipped(self):
        # double star: centers 0 and 1 joined, leaves hang off each; once 0
        # and 1 are taken every leaf is covered, so leaves picked in the
        # same group must be skipped, never added
        g = Graph(8, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 5), (1, 6), (1, 7)])
        params = PolicyParams.initialize(4, 2, seed=3)

        def worker(comm):
            sched = SelectionSchedule(thresholds=((0.01, 8),), fallback_d=8)
            (res,) = solve([g], params, comm, schedule=sched)
            return res
        res = run_workers(2, worker)[0]
        assert covers_all_edges(g.edge_array, res.cover)
        assert res.skipped > 0
        # a redundant node whose edges were all covered never enters
        assert len(res.cover) < 8

    def test_monotone_progress_and_stats(self):
        g = generate_er(30, 0.2, 21)
        params = PolicyParams.initialize(8, 2, seed=4)

        def worker(comm):
            (res,) = solve([g], params, comm)
            return res
        res = run_workers(1, worker)[0]
        assert res.steps <= len(res.cover)
        assert res.policy_evals == res.steps
        assert len(res.cover) <= g.num_nodes

    def test_partition_invariant_trajectories(self):
        params = PolicyParams.initialize(8, 2, seed=6)
        graphs = [generate_er(24 + 8 * i, 0.2, 500 + i) for i in range(3)]

        def worker(comm):
            return [tuple(r.cover) for r in solve(graphs, params, comm)]
        base = run_workers(1, worker)[0]
        for p in (2, 4):
            assert run_workers(p, worker)[0] == base

    def test_mixed_sizes_are_grouped_and_ordered(self):
        params = PolicyParams.initialize(4, 2, seed=7)
        graphs = [generate_er(10, 0.3, 1), generate_er(15, 0.3, 2),
                  generate_er(10, 0.3, 3)]

        def worker(comm):
            return solve(graphs, params, comm, graph_ids=[7, 8, 9])
        results = run_workers(1, worker)[0]
        assert [r.graph_id for r in results] == [7, 8, 9]
        for res, g in zip(results, graphs):
            assert covers_all_edges(g.edge_array, res.cover)

    def test_batched_graphs_match_individual_solves(self):
        params = PolicyParams.initialize(8, 2, seed=8)
        graphs = [generate_er(16, 0.25, 600 + i) for i in range(3)]

        def batched(comm):
            return [tuple(r.cover) for r in solve(graphs, params, comm)]

        def single(comm, g):
            return tuple(solve([g], params, comm)[0].cover)
        together = run_workers(1, batched)[0]
        separate = [run_workers(1, single, g)[0] for g in graphs]
        assert together == separate
