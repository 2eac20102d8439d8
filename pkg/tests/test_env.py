"""Environment reset/step semantics and the episode-return identity."""
import numpy as np
import pytest

from graphrl import (Graph, InvalidActionError, generate_er, is_vertex_cover,
                     reset, run_workers)
from graphrl.env import MVC, PROBLEMS

TRIANGLE = Graph(3, [(0, 1), (1, 2), (0, 2)])
STAR4 = Graph(4, [(0, 1), (0, 2), (0, 3)])


class TestReset:
    def test_edgeless_graph_is_immediately_terminal(self):
        def worker(comm):
            env = reset(Graph(5), comm)
            return env.terminated
        assert run_workers(1, worker) == [True]

    def test_triangle_starts_with_all_candidates(self):
        def worker(comm):
            env = reset(TRIANGLE, comm)
            cand = comm.all_gather(env.state.cand[0], axis=-1)
            return env.terminated, cand.tolist(), env.selected
        done, cand, selected = run_workers(1, worker)[0]
        assert not done
        assert cand == [1, 1, 1]
        assert selected == []

    def test_isolated_nodes_are_not_candidates(self):
        g = Graph(4, [(1, 2)])

        def worker(comm):
            env = reset(g, comm)
            return comm.all_gather(env.state.cand[0], axis=-1).tolist()
        assert run_workers(2, worker)[0] == [0, 1, 1, 0]


class TestStep:
    def test_rewards_and_termination(self):
        def worker(comm):
            env = reset(TRIANGLE, comm)
            first = env.step(0)
            second = env.step(1)
            return first, second, env.total_reward, env.step_count
        first, second, total, count = run_workers(2, worker)[0]
        assert first == (-1.0, False)
        assert second == (-1.0, True)
        assert total == -2.0
        assert count == 2

    def test_star_center_finishes_in_one_step(self):
        def worker(comm):
            env = reset(STAR4, comm)
            return env.step(0)
        assert run_workers(1, worker)[0] == (-1.0, True)

    def test_step_after_termination_rejected(self):
        def worker(comm):
            env = reset(STAR4, comm)
            env.step(0)
            with pytest.raises(InvalidActionError, match="terminated"):
                env.step(1)
        run_workers(1, worker)

    def test_invalid_action_is_a_hard_error(self):
        def worker(comm):
            env = reset(TRIANGLE, comm)
            env.step(0)
            with pytest.raises(InvalidActionError):
                env.step(0)
        run_workers(1, worker)


class TestEpisodeInvariants:
    def test_return_equals_negative_cover_size_and_terminal_iff_cover(self):
        rng = np.random.default_rng(0)
        for trial in range(6):
            g = generate_er(10, 0.35, 50 + trial)

            def worker(comm):
                env = reset(g, comm)
                local_rng = np.random.default_rng(trial)
                while not env.terminated:
                    cand = comm.all_gather(env.state.cand[0], axis=-1)
                    idx = np.flatnonzero(cand)
                    env.step(int(idx[int(local_rng.integers(idx.size))]))
                return env.selected, env.total_reward

            selected, total = run_workers(2, worker)[0]
            assert total == -float(len(selected))
            assert is_vertex_cover(g, selected)
            # removing the last pick must break coverage (termination was
            # detected exactly when the cover completed)
            if selected:
                assert not is_vertex_cover(g, selected[:-1])


class TestProblemSpec:
    def test_registry_ships_mvc(self):
        assert PROBLEMS["mvc"] is MVC

    def test_rules_are_pure_and_match_the_env(self):
        sol = frozenset({0})
        assert MVC.reward_rule(TRIANGLE, frozenset(), 0) == -1.0
        assert not MVC.termination_rule(TRIANGLE, sol)
        assert MVC.termination_rule(TRIANGLE, frozenset({0, 1}))
        assert MVC.candidate_rule(TRIANGLE, sol, 1)
        assert not MVC.candidate_rule(TRIANGLE, sol, 0)
        assert not MVC.candidate_rule(STAR4, frozenset({0}), 1)

    def test_rules_agree_with_partitioned_state(self):
        g = generate_er(9, 0.3, 7)

        def worker(comm):
            env = reset(g, comm)
            rng = np.random.default_rng(1)
            checks = []
            while not env.terminated:
                cand = comm.all_gather(env.state.cand[0], axis=-1)
                sol = env.solution_set()
                for v in range(g.num_nodes):
                    checks.append(bool(cand[v])
                                  == MVC.candidate_rule(g, sol, v))
                checks.append(env.terminated
                              == MVC.termination_rule(g, sol))
                idx = np.flatnonzero(cand)
                env.step(int(idx[int(rng.integers(idx.size))]))
            checks.append(MVC.termination_rule(g, env.solution_set()))
            return all(checks)
        assert run_workers(1, worker) == [True]
