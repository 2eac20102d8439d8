"""Deep Q-learning for minimum vertex cover over partitioned graph state.

A batch of same-size graphs lives row-partitioned across P in-process
workers that cooperate only through sum-all-reduce and all-gather
collectives. The package ships the graph tooling, the collective layer, the
trainable message-passing policy with exact gradients, the DQN training
loop, the multi-node-selection solver, reference MVC solvers, and the
analytical cost/memory model, plus a CLI binding them into experiments.
"""

from .agent import (ExperienceTuple, MetricsRow, ReplayBuffer, TrainConfig,
                    act, compute_target, train, train_step, tuples_to_graphs)
from .collective import Comm, CollectiveStats, WorkerGroup, run_workers
from .costmodel import (CostConfig, CostTerms, compare_instrumented,
                        efficiency_action, efficiency_embed, expected_edges,
                        memory_bytes, t_action, t_action_seq, t_embed,
                        t_embed_seq)
from .env import MVC, MvcEnv, ProblemSpec, reset
from .errors import (CollectiveError, ConfigError, DataError, GraphRLError,
                     InvalidActionError)
from .graphs import Graph, generate_ba, generate_er, load_edge_list, write_edge_list
from .inference import SelectionSchedule, SolveResult, select_top_d, solve
from .oracles import (CoverResult, approx_ratio, exact_mvc, is_vertex_cover,
                      matching_lower_bound, reference_for, two_approx_mvc)
from .policy import (AdamState, PolicyParams, adam_step, embed_forward,
                     load_checkpoint, loss_and_gradients, masked_scores,
                     q_forward, save_checkpoint)
from .state import Partition, PartitionedState, apply_action, is_covered, partition_rows

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Comm", "CollectiveError", "CollectiveStats", "ConfigError",
    "CostConfig", "CostTerms", "CoverResult", "DataError", "ExperienceTuple",
    "Graph", "GraphRLError", "InvalidActionError", "MVC", "MetricsRow",
    "MvcEnv", "Partition", "PartitionedState", "PolicyParams", "ProblemSpec",
    "ReplayBuffer", "SelectionSchedule", "SolveResult", "TrainConfig",
    "WorkerGroup", "act", "adam_step", "apply_action", "approx_ratio",
    "compare_instrumented", "compute_target", "efficiency_action",
    "efficiency_embed", "embed_forward", "exact_mvc", "expected_edges",
    "generate_ba", "generate_er", "is_covered", "is_vertex_cover",
    "load_checkpoint", "load_edge_list", "loss_and_gradients",
    "masked_scores", "matching_lower_bound", "memory_bytes", "partition_rows",
    "q_forward", "reference_for", "reset", "run_workers", "save_checkpoint",
    "select_top_d", "solve", "t_action", "t_action_seq", "t_embed",
    "t_embed_seq", "train", "train_step", "tuples_to_graphs",
    "two_approx_mvc", "write_edge_list",
]
