"""Worker group semantics: reduction order, gathering, errors, counters."""
import threading
import time

import numpy as np
import pytest

from graphrl import CollectiveError, WorkerGroup, run_workers


class TestAllReduceSum:
    def test_single_rank_identity(self):
        def worker(comm):
            return comm.all_reduce_sum(np.array([1.5, -2.0]))
        (out,) = run_workers(1, worker)
        assert out.tolist() == [1.5, -2.0]

    def test_two_rank_sum(self):
        def worker(comm):
            local = np.array([1.0, 2.0]) if comm.rank == 0 else np.array([3.0, 4.0])
            return comm.all_reduce_sum(local)
        r0, r1 = run_workers(2, worker)
        assert r0.tolist() == [4.0, 6.0]
        assert r1.tolist() == [4.0, 6.0]

    def test_all_zeros(self):
        def worker(comm):
            return comm.all_reduce_sum(np.zeros((2, 3)))
        for out in run_workers(3, worker):
            assert not out.any()

    def test_integer_sums_are_exact(self):
        rng = np.random.default_rng(0)
        locals_ = [rng.integers(-1000, 1000, size=17) for _ in range(8)]

        def worker(comm):
            return comm.all_reduce_sum(locals_[comm.rank])
        outs = run_workers(8, worker)
        expected = np.sum(locals_, axis=0)
        for out in outs:
            assert np.array_equal(out, expected)

    def test_float32_close_to_serial_sum(self):
        rng = np.random.default_rng(1)
        locals_ = [rng.normal(size=200).astype(np.float32) for _ in range(8)]

        def worker(comm):
            return comm.all_reduce_sum(locals_[comm.rank])
        outs = run_workers(8, worker)
        stacked = np.stack(locals_)
        expected = np.sum(stacked, axis=0, dtype=np.float64)
        # relative to the accumulated magnitude, the usual backward bound
        scale = np.abs(stacked).sum(axis=0)
        for out in outs:
            rel = np.abs(out - expected) / scale
            assert rel.max() < 1e-6

    def test_bitwise_identical_across_ranks(self):
        rng = np.random.default_rng(2)
        locals_ = [rng.normal(size=50).astype(np.float32) for _ in range(4)]

        def worker(comm):
            return comm.all_reduce_sum(locals_[comm.rank])
        outs = run_workers(4, worker)
        for out in outs[1:]:
            assert np.array_equal(out, outs[0])

    def test_shape_mismatch_raises(self):
        def worker(comm):
            local = np.zeros(3) if comm.rank == 0 else np.zeros(4)
            return comm.all_reduce_sum(local)
        with pytest.raises(CollectiveError, match="shape mismatch"):
            run_workers(2, worker)

    def test_result_is_a_fresh_copy(self):
        def worker(comm):
            local = np.array([1.0])
            out = comm.all_reduce_sum(local)
            out[0] = 99.0
            return local[0]
        assert run_workers(1, worker) == [1.0]


class TestAllGather:
    def test_uneven_blocks_concatenate_in_rank_order(self):
        def worker(comm):
            local = np.array([10, 20]) if comm.rank == 0 else np.array([30])
            return comm.all_gather(local, axis=0)
        for out in run_workers(2, worker):
            assert out.tolist() == [10, 20, 30]

    def test_single_rank_identity(self):
        def worker(comm):
            return comm.all_gather(np.array([7.0]))
        assert run_workers(1, worker)[0].tolist() == [7.0]

    def test_block_scores_index_global_node_order(self):
        # rank 0 scores nodes 0-3, rank 1 scores 4-7
        def worker(comm):
            base = comm.rank * 4
            return comm.all_gather(np.arange(base, base + 4, dtype=float))
        for out in run_workers(2, worker):
            assert out.tolist() == list(range(8))

    def test_slicing_back_returns_local_input(self):
        rng = np.random.default_rng(3)
        locals_ = [rng.normal(size=(2, 5)) for _ in range(3)]

        def worker(comm):
            return comm.all_gather(locals_[comm.rank], axis=-1)
        outs = run_workers(3, worker)
        for rank in range(3):
            block = outs[0][:, rank * 5:(rank + 1) * 5]
            assert np.array_equal(block, locals_[rank])

    def test_off_axis_mismatch_raises(self):
        def worker(comm):
            local = np.zeros((2, 3)) if comm.rank == 0 else np.zeros((3, 4))
            return comm.all_gather(local, axis=-1)
        with pytest.raises(CollectiveError, match="mismatch"):
            run_workers(2, worker)


class TestBarrierAndFailure:
    def test_single_rank_barrier_is_noop(self):
        def worker(comm):
            comm.barrier()
            return True
        assert run_workers(1, worker) == [True]

    def test_all_ranks_proceed_together(self):
        order = []
        lock = threading.Lock()

        def worker(comm):
            with lock:
                order.append(("before", comm.rank))
            comm.barrier()
            with lock:
                order.append(("after", comm.rank))
        run_workers(4, worker)
        befores = [i for i, (phase, _) in enumerate(order) if phase == "before"]
        afters = [i for i, (phase, _) in enumerate(order) if phase == "after"]
        assert max(befores) < min(afters)

    def test_lost_rank_times_out_with_diagnostic(self):
        def worker(comm):
            if comm.rank == 1:
                time.sleep(2.0)  # never enters the collective in time
                return None
            return comm.all_reduce_sum(np.ones(2))
        with pytest.raises(CollectiveError, match="did not arrive"):
            run_workers(2, worker, timeout=0.2)

    def test_worker_exception_propagates(self):
        def worker(comm):
            if comm.rank == 0:
                raise RuntimeError("boom")
            return comm.all_reduce_sum(np.ones(1))
        with pytest.raises(RuntimeError, match="boom"):
            run_workers(2, worker, timeout=5.0)

    def test_nested_use_between_episodes(self):
        def worker(comm):
            totals = []
            for episode in range(3):
                comm.barrier()
                out = comm.all_reduce_sum(np.array([float(episode)]))
                comm.barrier()
                totals.append(float(out[0]))
            return totals
        for out in run_workers(4, worker):
            assert out == [0.0, 4.0, 8.0]


class TestInstrumentation:
    def test_counters_track_calls_and_elements(self):
        group = WorkerGroup(2)

        def worker(comm):
            comm.all_reduce_sum(np.zeros((3, 4)), tag="embed_fwd")
            comm.all_reduce_sum(np.zeros((3, 4)), tag="embed_fwd")
            comm.all_gather(np.zeros(5), tag="select")
        run_workers(2, worker, group=group)
        stats = group.stats_snapshot()
        assert stats["embed_fwd"].calls == 2
        assert stats["embed_fwd"].elements == 24
        assert stats["select"].calls == 1
        assert stats["select"].elements == 5

    def test_reset(self):
        group = WorkerGroup(1)
        group.comm(0).all_reduce_sum(np.zeros(2))
        group.reset_stats()
        assert group.stats_snapshot() == {}
