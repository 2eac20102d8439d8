"""Closed-form flop, communication, efficiency, and memory models.

Pure formula evaluation from a configuration, with a comparison report that
pairs each modeled quantity against counters measured from a real run. The
latency/bandwidth constants are what-if knobs for the analysis; nothing here
claims to predict the in-process collectives' wall time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CostConfig:
    """Inputs to the analytical model.

    b: graph batch size; n: nodes per graph; rho: edge probability;
    k: embedding dimension; l: embedding layers; p: workers;
    alpha: latency seconds per collective; beta: seconds per transferred
    element (reciprocal bandwidth); r: replay buffer capacity.
    """
    b: int = 1
    n: int = 1000
    rho: float = 0.15
    k: int = 32
    l: int = 2
    p: int = 1
    alpha: float = 1e-5
    beta: float = 1e-9
    r: int = 50_000

    def __post_init__(self):
        if min(self.b, self.n, self.k, self.l, self.p, self.r) < 1:
            raise ValueError("b, n, k, l, p, r must all be >= 1")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if self.p > self.n:
            raise ValueError(f"p ({self.p}) cannot exceed n ({self.n})")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")


@dataclass(frozen=True)
class CostTerms:
    """One operation's cost split into compute, latency, and bandwidth."""
    compute: float
    latency: float
    bandwidth: float

    @property
    def total(self) -> float:
        return self.compute + self.latency + self.bandwidth


def t_embed(cfg: CostConfig) -> CostTerms:
    """Per-rank cost of one embedding forward pass over the worker group."""
    b, n, rho, k, l, p = cfg.b, cfg.n, cfg.rho, cfg.k, cfg.l, cfg.p
    compute = n ** 2 / p * (b * k * (rho + l) + b * k * (2 + k + 4 * l) / n)
    latency = cfg.alpha * l * math.log2(p)
    bandwidth = cfg.beta * l * b * k * n
    return CostTerms(compute, latency, bandwidth)


def t_embed_seq(cfg: CostConfig) -> float:
    """Single-worker embedding cost (no communication terms)."""
    b, n, rho, k, l = cfg.b, cfg.n, cfg.rho, cfg.k, cfg.l
    return n ** 2 * (b * k * (rho + l) + b * k * (2 + k + 4 * l) / n)


def t_action(cfg: CostConfig) -> CostTerms:
    """Per-rank cost of one action-evaluation pass over the worker group."""
    b, n, k, p = cfg.b, cfg.n, cfg.k, cfg.p
    compute = b * k * n / p * (6 + k + k * p / n)
    latency = cfg.alpha * math.log2(p)
    bandwidth = cfg.beta * b * k
    return CostTerms(compute, latency, bandwidth)


def t_action_seq(cfg: CostConfig) -> float:
    b, n, k = cfg.b, cfg.n, cfg.k
    return b * k * n * (6 + k + k / n)


def efficiency_embed(cfg: CostConfig) -> float:
    """Parallel efficiency of the embedding pass; near 1 when P << N."""
    return 1.0 / (1.0 + cfg.beta * cfg.p / (cfg.n * (1.0 + cfg.rho / cfg.l)))


def efficiency_action(cfg: CostConfig) -> float:
    """Parallel efficiency of the action-evaluation pass."""
    c = (cfg.k + 6) / cfg.k
    return 1.0 / (1.0 + cfg.p / (c * cfg.n + 1.0)
                  + cfg.beta / (cfg.n * (cfg.k + 6)))


def expected_edges(cfg: CostConfig) -> float:
    """Expected edge count of one generated graph: n^2 * rho / 2.

    The adjacency holds two coordinate entries per edge, so the modeled
    entry count per graph is n^2 * rho.
    """
    return cfg.n ** 2 * cfg.rho / 2.0


def memory_bytes(cfg: CostConfig) -> dict[str, float]:
    """Modeled per-rank bytes, assuming 20-byte coordinate entries."""
    b, n, rho, p, r = cfg.b, cfg.n, cfg.rho, cfg.p, cfg.r
    return {
        "adjacency": 20.0 * n ** 2 * rho * b / p,
        "solutions": 4.0 * n * b / p,
        "candidates": 4.0 * n * b / p,
        "replay": 8.0 * r * (n / p + 1.0),
    }


def adjacency_bytes_from_entries(entries: int, b: int = 1, p: int = 1) -> float:
    """Entry-count variant of the adjacency model: 20 bytes per entry."""
    return 20.0 * entries * b / p


# ---------------------------------------------------------------------------
# Model vs measurement
# ---------------------------------------------------------------------------

DIVERGENCE_FACTOR = 2.0


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    model: float
    measured: float
    ratio: float
    flagged: bool


def _row(name: str, model: float, measured: float) -> ComparisonRow:
    if model > 0 and measured > 0:
        ratio = measured / model
    elif model == measured:
        ratio = 1.0
    else:
        ratio = float("inf")
    flagged = ratio > DIVERGENCE_FACTOR or ratio < 1.0 / DIVERGENCE_FACTOR
    return ComparisonRow(name, float(model), float(measured), ratio, flagged)


def compare_instrumented(cfg: CostConfig, counters: dict) -> list[ComparisonRow]:
    """Pair model terms with measured counters; flag >2x divergence.

    Recognized counter keys (missing ones are skipped):
      embed_forward_calls / embed_allreduce_calls / embed_allreduce_elements
      q_forward_calls / q_allreduce_calls / q_allreduce_elements
      grad_allreduce_calls / grad_allreduce_elements / train_iterations
      replay_bytes / replay_len / adjacency_entries
    """
    rows: list[ComparisonRow] = []
    b, n, k, l = cfg.b, cfg.n, cfg.k, cfg.l
    if {"embed_forward_calls", "embed_allreduce_calls"} <= counters.keys():
        fwd = max(counters["embed_forward_calls"], 1)
        rows.append(_row("allreduce calls per embed forward", l,
                         counters["embed_allreduce_calls"] / fwd))
        if "embed_allreduce_elements" in counters:
            rows.append(_row(
                "elements per embed all-reduce", b * k * n,
                counters["embed_allreduce_elements"]
                / max(counters["embed_allreduce_calls"], 1)))
    if {"q_forward_calls", "q_allreduce_calls"} <= counters.keys():
        fwd = max(counters["q_forward_calls"], 1)
        rows.append(_row("allreduce calls per action evaluation", 1,
                         counters["q_allreduce_calls"] / fwd))
        if "q_allreduce_elements" in counters:
            rows.append(_row(
                "elements per action all-reduce", b * k,
                counters["q_allreduce_elements"]
                / max(counters["q_allreduce_calls"], 1)))
    if {"grad_allreduce_calls", "train_iterations"} <= counters.keys():
        iters = max(counters["train_iterations"], 1)
        rows.append(_row("gradient all-reduces per training iteration", 1,
                         counters["grad_allreduce_calls"] / iters))
        if "grad_allreduce_elements" in counters:
            rows.append(_row(
                "elements per gradient all-reduce", 4 * k * k + 4 * k,
                counters["grad_allreduce_elements"]
                / max(counters["grad_allreduce_calls"], 1)))
    if "replay_bytes" in counters:
        model_r = cfg.r if "replay_len" not in counters else counters["replay_len"]
        rows.append(_row("replay buffer bytes",
                         8.0 * model_r * (n / cfg.p + 1.0),
                         counters["replay_bytes"]))
    if "adjacency_entries" in counters:
        rows.append(_row("adjacency entries per rank", n * n * cfg.rho * b / cfg.p,
                         counters["adjacency_entries"]))
    return rows


def format_report(cfg: CostConfig, rows: list[ComparisonRow] | None = None,
                  csv: bool = False) -> str:
    """Render the cost table (and optional comparison) as text or CSV."""
    embed = t_embed(cfg)
    action = t_action(cfg)
    mem = memory_bytes(cfg)
    entries = [
        ("embed compute (flops)", embed.compute),
        ("embed latency (s)", embed.latency),
        ("embed bandwidth (s)", embed.bandwidth),
        ("embed sequential (flops)", t_embed_seq(cfg)),
        ("action compute (flops)", action.compute),
        ("action latency (s)", action.latency),
        ("action bandwidth (s)", action.bandwidth),
        ("action sequential (flops)", t_action_seq(cfg)),
        ("efficiency embed", efficiency_embed(cfg)),
        ("efficiency action", efficiency_action(cfg)),
        ("expected edges per graph", expected_edges(cfg)),
        ("adjacency bytes per rank", mem["adjacency"]),
        ("solution bytes per rank", mem["solutions"]),
        ("candidate bytes per rank", mem["candidates"]),
        ("replay bytes per rank", mem["replay"]),
    ]
    lines = []
    if csv:
        lines.append("quantity,value")
        lines.extend(f"{name},{value!r}" for name, value in entries)
    else:
        width = max(len(name) for name, _ in entries)
        lines.append(f"cost model for B={cfg.b} N={cfg.n} rho={cfg.rho} "
                     f"K={cfg.k} L={cfg.l} P={cfg.p}")
        lines.extend(f"  {name:<{width}}  {value:.6g}" for name, value in entries)
    if rows:
        if csv:
            lines.append("comparison,model,measured,ratio,flagged")
            lines.extend(
                f"{r.name},{r.model!r},{r.measured!r},{r.ratio:.4g},{r.flagged}"
                for r in rows)
        else:
            lines.append("model vs measured:")
            for r in rows:
                flag = "  << diverges >2x" if r.flagged else ""
                lines.append(f"  {r.name}: model {r.model:.6g}, measured "
                             f"{r.measured:.6g} (x{r.ratio:.3g}){flag}")
    return "\n".join(lines)
