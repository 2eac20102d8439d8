"""Graph-problem environment: reset, step, reward, termination.

Minimum vertex cover is the shipped problem; ProblemSpec is the seam for
plugging in other node-selection problems. The environment is collective:
every rank holds its own MvcEnv over its partition slice and all ranks step
with the same node each logical step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import InvalidActionError
from .graphs import Graph
from .state import PartitionedState, partition_rows


@dataclass(frozen=True)
class ProblemSpec:
    """Reward, termination, and candidacy rules for one graph problem.

    All three are pure functions of (graph, current solution set, action).
    """
    name: str
    reward_rule: Callable[[Graph, frozenset, int], float]
    termination_rule: Callable[[Graph, frozenset], bool]
    candidate_rule: Callable[[Graph, frozenset, int], bool]


def _mvc_reward(graph: Graph, solution: frozenset, action: int) -> float:
    return -1.0


def _mvc_terminated(graph: Graph, solution: frozenset) -> bool:
    return all(u in solution or v in solution for u, v in graph.edge_array)


def _mvc_candidate(graph: Graph, solution: frozenset, v: int) -> bool:
    if v in solution:
        return False
    for u, w in graph.edge_array:
        if (u == v and w not in solution) or (w == v and u not in solution):
            return True
    return False


MVC = ProblemSpec("mvc", _mvc_reward, _mvc_terminated, _mvc_candidate)
PROBLEMS = {"mvc": MVC}


class MvcEnv:
    """Episode state for one graph distributed over the worker group."""

    def __init__(self, graph: Graph, comm, problem: ProblemSpec = MVC,
                 graph_id: int = 0, dtype=None):
        part = partition_rows(graph.num_nodes, comm.size)[comm.rank]
        kwargs = {"dtype": dtype} if dtype is not None else {}
        self.graph = graph
        self.problem = problem
        self.comm = comm
        self.state = PartitionedState([graph], part, graph_ids=[graph_id], **kwargs)
        self.step_count = 0
        self.total_reward = 0.0
        self.selected: list[int] = []
        self.terminated = self.state.is_covered(0, comm)

    def solution_set(self) -> frozenset:
        return frozenset(self.selected)

    def step(self, v: int) -> tuple[float, bool]:
        """Apply node v; returns (reward, done). Invalid actions raise."""
        if self.terminated:
            raise InvalidActionError("episode already terminated")
        if v in self.selected:
            raise InvalidActionError(f"node {v} is already in the solution")
        before = self.solution_set()
        self.state.apply_action(v, slot=0)
        reward = self.problem.reward_rule(self.graph, before, v)
        self.selected.append(v)
        self.step_count += 1
        self.total_reward += reward
        done = self.state.is_covered(0, self.comm)
        self.terminated = done
        return reward, done


def reset(graph: Graph, comm, problem: ProblemSpec = MVC,
          graph_id: int = 0, dtype=None) -> MvcEnv:
    """New episode: S empty, candidates = every node with degree >= 1."""
    return MvcEnv(graph, comm, problem=problem, graph_id=graph_id, dtype=dtype)
