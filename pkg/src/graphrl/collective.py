"""In-process worker group with sum-all-reduce and all-gather collectives.

Workers are threads of one process that synchronize only through the
collectives below. Reduction runs in ascending rank order, so results are
bitwise reproducible for a fixed worker count. The contract mirrors a
message-passing backend: arrays cross ranks by value and every rank must
enter each collective exactly once per logical step.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import CollectiveAborted, CollectiveError

DEFAULT_TIMEOUT = 30.0


@dataclass
class CollectiveStats:
    """Per-tag instrumentation: logical calls and per-rank elements sent."""
    calls: int = 0
    elements: int = 0


class WorkerGroup:
    """A fixed set of P cooperating workers and their rendezvous state."""

    def __init__(self, num_workers: int, timeout: float = DEFAULT_TIMEOUT):
        if num_workers < 1:
            raise ValueError(f"num_workers must be >= 1, got {num_workers}")
        self.num_workers = int(num_workers)
        self.timeout = float(timeout)
        self._slots: list = [None] * num_workers
        self._barrier = threading.Barrier(num_workers)
        self._stats: dict[str, CollectiveStats] = {}
        self._stats_lock = threading.Lock()

    def comm(self, rank: int) -> "Comm":
        if not 0 <= rank < self.num_workers:
            raise ValueError(f"rank {rank} out of range for P={self.num_workers}")
        return Comm(self, rank)

    def abort(self) -> None:
        """Break the rendezvous so blocked ranks fail fast instead of hanging."""
        self._barrier.abort()

    # -- instrumentation ---------------------------------------------------

    def stats_snapshot(self) -> dict[str, CollectiveStats]:
        with self._stats_lock:
            return {tag: CollectiveStats(s.calls, s.elements)
                    for tag, s in self._stats.items()}

    def reset_stats(self) -> None:
        with self._stats_lock:
            self._stats.clear()

    def _record(self, tag: str, elements: int) -> None:
        with self._stats_lock:
            entry = self._stats.setdefault(tag, CollectiveStats())
            entry.calls += 1
            entry.elements += elements

    # -- rendezvous --------------------------------------------------------

    def _sync(self) -> None:
        try:
            self._barrier.wait(timeout=self.timeout)
        except threading.BrokenBarrierError:
            raise CollectiveAborted(
                f"collective aborted: a rank failed or did not arrive within "
                f"{self.timeout:.1f}s (P={self.num_workers})"
            ) from None

    def _exchange(self, rank: int, value) -> list:
        """Deposit one value per rank; return the rank-ordered snapshot.

        Values are deposited as copies: peers keep references past the
        rendezvous window, so sharing the caller's live array would let a
        fast rank's later in-place mutation leak into a slow rank's result.
        """
        self._slots[rank] = np.asarray(value).copy()
        self._sync()
        snapshot = list(self._slots)
        self._sync()
        return snapshot


class Comm:
    """Per-rank handle used to enter collectives."""

    def __init__(self, group: WorkerGroup, rank: int):
        self.group = group
        self.rank = rank
        self.size = group.num_workers

    def all_reduce_sum(self, local, tag: str = "default") -> np.ndarray:
        """Elementwise sum over ranks, reduced in ascending rank order.

        Every rank receives the same freshly allocated array. Shapes must
        match exactly across ranks.
        """
        arr = np.asarray(local)
        if self.rank == 0:
            self.group._record(tag, arr.size)
        slots = self.group._exchange(self.rank, arr)
        shapes = [s.shape for s in slots]
        if any(shape != shapes[0] for shape in shapes):
            raise CollectiveError(f"all_reduce_sum shape mismatch across ranks: {shapes}")
        dtype = np.result_type(*[s.dtype for s in slots])
        out = slots[0].astype(dtype, copy=True)
        for other in slots[1:]:
            out += other
        return out

    def all_gather(self, local, axis: int = -1, tag: str = "default") -> np.ndarray:
        """Rank-ordered concatenation along `axis`.

        With block row partitioning the concatenated node axis is in global
        node order. Shapes must agree on every axis but `axis`.
        """
        arr = np.asarray(local)
        if self.rank == 0:
            self.group._record(tag, arr.size)
        slots = self.group._exchange(self.rank, arr)
        ref = list(slots[0].shape)
        ax = axis % max(slots[0].ndim, 1) if slots[0].ndim else 0
        for s in slots:
            other = list(s.shape)
            if len(other) != len(ref):
                raise CollectiveError(
                    f"all_gather rank mismatch: {[t.shape for t in slots]}")
            if other[:ax] != ref[:ax] or other[ax + 1:] != ref[ax + 1:]:
                raise CollectiveError(
                    f"all_gather shape mismatch off the concat axis: "
                    f"{[t.shape for t in slots]}")
        if self.size == 1:
            return slots[0].copy()
        return np.concatenate(slots, axis=axis)

    def barrier(self) -> None:
        """All ranks arrive before any proceeds."""
        self.group._sync()


def run_workers(num_workers: int, fn, *args, timeout: float = DEFAULT_TIMEOUT,
                group: WorkerGroup | None = None) -> list:
    """Run fn(comm, *args) on every rank; return results in rank order.

    P=1 runs inline. For P>1 each rank runs on its own thread; the first
    exception aborts the group (so peers blocked in a collective fail fast)
    and is re-raised here.
    """
    if group is None:
        group = WorkerGroup(num_workers, timeout=timeout)
    elif group.num_workers != num_workers:
        raise ValueError("group size does not match num_workers")
    if num_workers == 1:
        return [fn(group.comm(0), *args)]

    results: list = [None] * num_workers
    failures: list[tuple[int, BaseException]] = []
    failures_lock = threading.Lock()

    def runner(rank: int) -> None:
        try:
            results[rank] = fn(group.comm(rank), *args)
        except BaseException as exc:  # noqa: BLE001 - propagated to caller
            with failures_lock:
                failures.append((rank, exc))
            group.abort()

    threads = [threading.Thread(target=runner, args=(r,), name=f"worker-{r}")
               for r in range(num_workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        failures.sort(key=lambda item: item[0])
        # A failure on one rank breaks the barrier for its peers; prefer the
        # root cause over knock-on aborts when reporting.
        def precedence(item):
            exc = item[1]
            if isinstance(exc, CollectiveAborted):
                return 2
            if isinstance(exc, CollectiveError):
                return 1
            return 0
        failures.sort(key=precedence)
        raise failures[0][1]
    return results
