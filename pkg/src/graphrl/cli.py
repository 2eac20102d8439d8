"""Command-line surface: gen, train, solve, eval, cost-model.

Every command is reproducible from a config file plus a seed; outputs are
plain text/CSV and the effective configuration is echoed next to them.
Exit codes: 0 success, 2 config error, 3 data error, 4 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .agent import TrainConfig, train
from .collective import run_workers
from .config import (RunConfig, apply_overrides, dump_config, load_config,
                     parse_schedule, resolve_out_dir)
from .costmodel import CostConfig, compare_instrumented, format_report
from .errors import ConfigError, DataError, GraphRLError
from .graphs import Graph, generate_ba, generate_er, load_edge_list, write_edge_list
from .inference import solve
from .oracles import (CoverResult, approx_ratio, is_vertex_cover,
                      matching_lower_bound, reference_for)
from .policy import AdamState, PolicyParams, load_checkpoint, save_checkpoint

METRICS_HEADER = "step,epsilon,loss,mean_approx_ratio,cover_size_mean"


def _graph_files(spec: str) -> list[Path]:
    path = Path(spec)
    if path.is_dir():
        files = sorted(path.glob("*.txt"))
        if not files:
            raise DataError(f"no *.txt graph files in {path}")
        return files
    if path.exists():
        return [path]
    raise DataError(f"graph path not found: {spec}")


def _load_graphs(spec: str) -> tuple[list[Graph], list[Path]]:
    files = _graph_files(spec)
    return [load_edge_list(f) for f in files], files


def _write_metrics(rows, path: Path) -> None:
    lines = [METRICS_HEADER]
    for row in rows:
        lines.append(f"{row.step},{row.epsilon!r},{row.loss!r},"
                     f"{row.mean_approx_ratio!r},{row.cover_size_mean!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.count < 1:
        raise ConfigError("--count must be >= 1")
    out = resolve_out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ["file,kind,nodes,edges,param,seed"]
    for i in range(args.count):
        seed = args.seed + i
        if args.kind == "er":
            if args.rho is None:
                raise ConfigError("er generation needs --rho")
            graph = generate_er(args.nodes, args.rho, seed)
            param = args.rho
        else:
            if args.deg is None:
                raise ConfigError("ba generation needs --deg")
            graph = generate_ba(args.nodes, args.deg, seed)
            param = args.deg
        name = f"graph_{i:03d}.txt"
        write_edge_list(graph, out / name, seed=seed)
        manifest.append(f"{name},{args.kind},{graph.num_nodes},"
                        f"{graph.num_edges},{param},{seed}")
    (out / "manifest.csv").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    print(f"wrote {args.count} {args.kind} graph(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _train_worker(comm, dataset, eval_graphs, reference_sizes, tcfg, steps,
                  resume, probe):
    params = adam = None
    start_step = 0
    if resume is not None:
        params, adam, start_step = resume
        params = params.copy()
        adam = AdamState(m={k: v.copy() for k, v in adam.m.items()},
                         v={k: v.copy() for k, v in adam.v.items()},
                         step=adam.step, lr=adam.lr)
    local_probe: dict = {}
    params, metrics = train(dataset, tcfg, comm, max_steps=steps,
                            eval_graphs=eval_graphs,
                            reference_sizes=reference_sizes,
                            params=params, adam=adam, start_step=start_step,
                            probe=local_probe)
    if comm.rank == 0:
        adam_state = local_probe.pop("adam_state")
        stats = comm.group.stats_snapshot()
        grad = stats.get("grad")
        if grad is not None:
            local_probe["grad_allreduce_calls"] = grad.calls
            local_probe["grad_allreduce_elements"] = grad.elements
        probe.update(local_probe)
        return params, metrics, adam_state
    return None


def cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "train_graphs": args.train_graphs, "eval_graphs": args.eval_graphs,
        "train_steps": args.steps, "seed": args.seed, "workers": args.workers,
        "out_dir": args.out, "tau": args.tau, "batch_size": args.batch_size,
    }
    cfg = apply_overrides(cfg, overrides)
    if not cfg.train_graphs:
        raise ConfigError("no training graphs: set train_graphs or --train-graphs")
    out = resolve_out_dir(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config_used.cfg")

    dataset, _ = _load_graphs(cfg.train_graphs)
    eval_graphs: list[Graph] = []
    reference_sizes: list[int] = []
    if cfg.eval_graphs:
        eval_graphs, _ = _load_graphs(cfg.eval_graphs)
        for g in eval_graphs:
            reference_sizes.append(reference_for(g).size)

    tcfg = TrainConfig(
        embed_dim=cfg.embed_dim, num_layers=cfg.num_layers,
        batch_size=cfg.batch_size, tau=cfg.tau, gamma=cfg.gamma,
        learning_rate=cfg.learning_rate, replay_capacity=cfg.replay_capacity,
        eps_start=cfg.eps_start, eps_end=cfg.eps_end,
        eps_decay_steps=cfg.eps_decay_steps, eval_every=cfg.eval_every,
        seed=cfg.seed, init_scale=cfg.init_scale,
        init_orientation=cfg.init_orientation)

    resume = None
    if args.resume:
        params = load_checkpoint(Path(args.resume) / "checkpoint.bin")
        state_file = Path(args.resume) / "train_state.npz"
        if not state_file.exists():
            raise DataError(f"missing train state: {state_file}")
        blob = np.load(state_file)
        adam = AdamState(
            m={name: blob[f"m_{name}"] for name in params.as_dict()},
            v={name: blob[f"v_{name}"] for name in params.as_dict()},
            step=int(blob["adam_step"]), lr=float(blob["lr"]))
        resume = (params, adam, int(blob["global_step"]))

    probe: dict = {}
    results = run_workers(cfg.workers, _train_worker, dataset, eval_graphs,
                          reference_sizes, tcfg, cfg.train_steps, resume, probe)
    params, metrics, adam_state = results[0]

    save_checkpoint(params, out / "checkpoint.bin")
    _write_metrics(metrics, out / "metrics.csv")
    arrays = {"global_step": probe.get("global_step", cfg.train_steps),
              "adam_step": adam_state.step, "lr": adam_state.lr}
    for name, arr in adam_state.m.items():
        arrays[f"m_{name}"] = arr
    for name, arr in adam_state.v.items():
        arrays[f"v_{name}"] = arr
    np.savez(out / "train_state.npz", **arrays)

    counters = {
        "b": cfg.batch_size, "n": dataset[0].num_nodes, "k": cfg.embed_dim,
        "l": cfg.num_layers, "p": cfg.workers,
        "train_iterations": probe.get("train_iterations", 0),
        "grad_allreduce_calls": probe.get("grad_allreduce_calls", 0),
        "grad_allreduce_elements": probe.get("grad_allreduce_elements", 0),
        "replay_bytes": probe.get("replay_bytes", 0),
        "replay_len": probe.get("replay_len", 0),
    }
    (out / "counters.json").write_text(json.dumps(counters, indent=2),
                                       encoding="utf-8")
    last = metrics[-1].mean_approx_ratio if metrics else float("nan")
    print(f"trained {probe.get('global_step', cfg.train_steps)} step(s); "
          f"{len(metrics)} eval row(s); final mean ratio {last:.4g}")
    print(f"checkpoint: {out / 'checkpoint.bin'}")
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def _solve_worker(comm, graphs, params, schedule, probe):
    local: dict = {}
    results = solve(graphs, params, comm, schedule=schedule, probe=local)
    if comm.rank == 0:
        probe.update(local)
        stats = comm.group.stats_snapshot()
        probe["stats"] = {tag: (s.calls, s.elements) for tag, s in stats.items()}
        return results
    return None


def cmd_solve(args) -> int:
    params = load_checkpoint(args.checkpoint)
    graphs, files = _load_graphs(args.graphs)
    schedule = parse_schedule(args.d_schedule)
    probe: dict = {}
    results = run_workers(args.workers, _solve_worker, graphs, params,
                          schedule, probe)[0]
    out = resolve_out_dir(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for res in results:
        nodes = " ".join(str(v) for v in res.cover)
        lines.append(f"{res.graph_id},{res.cover_size},{res.policy_evals},"
                     f"nodes:{nodes}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")

    stats = probe.get("stats", {})
    embed = stats.get("embed_fwd", (0, 0))
    q = stats.get("q_fwd", (0, 0))
    batch_sizes = probe.get("batch_sizes", [1])
    counters = {
        "b": batch_sizes[0] if len(set(batch_sizes)) == 1 else 1,
        "n": graphs[0].num_nodes, "k": params.embed_dim,
        "l": params.num_layers, "p": args.workers,
        "embed_forward_calls": probe.get("forward_calls", 0),
        "embed_allreduce_calls": embed[0], "embed_allreduce_elements": embed[1],
        "q_forward_calls": probe.get("forward_calls", 0),
        "q_allreduce_calls": q[0], "q_allreduce_elements": q[1],
        "adjacency_entries": probe.get("adjacency_entries", 0),
        "batch_sizes": batch_sizes,
    }
    counters_path = out.parent / (out.stem + "_counters.json")
    counters_path.write_text(json.dumps(counters, indent=2), encoding="utf-8")
    total_evals = sum(r.policy_evals for r in results)
    print(f"solved {len(results)} graph(s) from {len(files)} file(s); "
          f"{total_evals} policy evaluation(s)")
    print(f"results: {out}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    graphs, _ = _load_graphs(args.graphs)
    results_path = Path(args.results)
    if not results_path.exists():
        raise DataError(f"results file not found: {results_path}")
    lines_out = ["graph_id,cover_size,reference_size,ratio,reference_kind"]
    for lineno, line in enumerate(results_path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            head, nodes_part = line.split("nodes:", 1)
            graph_id, cover_size, _evals = head.rstrip(",").split(",")
            graph_id = int(graph_id)
            cover = frozenset(int(v) for v in nodes_part.split())
        except ValueError:
            raise DataError(f"{results_path}:{lineno}: malformed result line")
        if not 0 <= graph_id < len(graphs):
            raise DataError(f"{results_path}:{lineno}: graph_id {graph_id} "
                            f"outside the {len(graphs)} supplied graph(s)")
        graph = graphs[graph_id]
        cover_res = CoverResult(cover, len(cover), "solve", exact=False)
        reference = reference_for(graph, node_limit=args.exact_limit)
        ratio = approx_ratio(cover_res, reference, graph=graph)
        kind = "exact" if reference.exact else "matching-bound"
        lines_out.append(f"{graph_id},{len(cover)},{reference.size},"
                         f"{ratio!r},{kind}")
    out = resolve_out_dir(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines_out) + "\n", encoding="utf-8")
    print(f"evaluated {len(lines_out) - 1} result(s) -> {out}")
    return 0


# ---------------------------------------------------------------------------
# cost-model
# ---------------------------------------------------------------------------


def cmd_cost(args) -> int:
    counters = None
    if args.compare:
        compare_path = Path(args.compare)
        if not compare_path.exists():
            raise DataError(f"counters file not found: {compare_path}")
        counters = json.loads(compare_path.read_text())
    # Unset dimension flags fall back to the counters file (when comparing)
    # so the model is evaluated at the measured run's configuration.
    defaults = {"b": 1, "n": 1000, "rho": 0.15, "k": 32, "l": 2, "p": 1}
    dims = {}
    for name, fallback in defaults.items():
        given = getattr(args, name)
        if given is not None:
            dims[name] = given
        elif counters is not None and name in counters:
            dims[name] = counters[name]
        else:
            dims[name] = fallback
    try:
        cfg = CostConfig(alpha=args.alpha, beta=args.beta, r=args.r, **dims)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = compare_instrumented(cfg, counters) if counters is not None else None
    print(format_report(cfg, rows, csv=args.csv))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphrl",
        description="Deep Q-learning for minimum vertex cover over "
                    "partitioned graph state")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a graph corpus")
    gen.add_argument("--kind", choices=("er", "ba"), required=True)
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--rho", type=float, default=None,
                     help="edge probability for er graphs")
    gen.add_argument("--deg", type=int, default=None,
                     help="attachments per node for ba graphs")
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    tr = sub.add_parser("train", help="train a policy")
    tr.add_argument("--config", default=None, help="key = value config file")
    tr.add_argument("--train-graphs", dest="train_graphs", default=None)
    tr.add_argument("--eval-graphs", dest="eval_graphs", default=None)
    tr.add_argument("--steps", type=int, default=None)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--workers", type=int, default=None)
    tr.add_argument("--tau", type=int, default=None)
    tr.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    tr.add_argument("--out", default=None)
    tr.add_argument("--resume", default=None,
                    help="previous output directory to continue from")
    tr.set_defaults(func=cmd_train)

    so = sub.add_parser("solve", help="solve graphs with a trained policy")
    so.add_argument("--checkpoint", required=True)
    so.add_argument("--graphs", required=True)
    so.add_argument("--d-schedule", dest="d_schedule", default="adaptive")
    so.add_argument("--workers", type=int, default=1)
    so.add_argument("--out", default="results.txt")
    so.set_defaults(func=cmd_solve)

    ev = sub.add_parser("eval", help="score solve results against references")
    ev.add_argument("--results", required=True)
    ev.add_argument("--graphs", required=True)
    ev.add_argument("--exact-limit", dest="exact_limit", type=int, default=40)
    ev.add_argument("--out", default="ratios.csv")
    ev.set_defaults(func=cmd_eval)

    co = sub.add_parser("cost-model", help="print the analytical cost table")
    co.add_argument("--b", type=int, default=None)
    co.add_argument("--n", type=int, default=None)
    co.add_argument("--rho", type=float, default=None)
    co.add_argument("--k", type=int, default=None)
    co.add_argument("--l", type=int, default=None)
    co.add_argument("--p", type=int, default=None)
    co.add_argument("--alpha", type=float, default=1e-5)
    co.add_argument("--beta", type=float, default=1e-9)
    co.add_argument("--r", type=int, default=50_000)
    co.add_argument("--csv", action="store_true")
    co.add_argument("--compare", default=None,
                    help="counters.json from a train or solve run")
    co.set_defaults(func=cmd_cost)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (GraphRLError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
