"""Command line interface.

Exit codes: 0 on success, 2 for bad input (unknown files, invalid
parameters, malformed data), 1 for unexpected internal failures.
"""

from __future__ import annotations

import functools
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .errors import FormatError, LabelGraphError, NotFoundError, ParameterError
from .features import read_features, write_features
from .graph import build_knn_graph, load_graph, save_graph
from .propagation import (
    DEFAULT_ITERATIONS,
    propagate,
    read_label_file,
    soft_label_lines,
)
from .workflows import (
    ActiveLearningConfig,
    NoiseExperimentConfig,
    carve_eval_split,
    make_blobs,
    run_active_learning,
    run_noise_study,
)

DEFAULT_K = 10
DEFAULT_TEMPERATURE = 0.01


def _fail_cleanly(command):
    """Map domain errors to exit code 2 and keep tracebacks for real bugs."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ParameterError, FormatError, NotFoundError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except LabelGraphError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _read_features_file(path: str):
    file_path = Path(path)
    if not file_path.exists():
        raise NotFoundError(f"features file not found: {path}")
    return read_features(file_path.read_bytes())


def _read_truth_file(path: str, features, num_classes=None):
    file_path = Path(path)
    if not file_path.exists():
        raise NotFoundError(f"label file not found: {path}")
    with open(file_path, encoding="utf-8") as fh:
        return read_label_file(fh, features.index_of(), features.n,
                               num_classes=num_classes)


def _parse_list(raw: str, kind, name: str):
    try:
        values = [kind(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ParameterError(f"invalid {name} list {raw!r}") from exc
    if not values:
        raise ParameterError(f"{name} list is empty")
    return values


@click.group()
@click.option("--threads", type=int, default=None,
              help="Worker threads for the graph build (default: serial).")
@click.pass_context
def main(ctx, threads):
    """Graph-based label propagation toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


@main.command()
@click.option("--features", "features_path", required=True, type=str,
              help="Feature file (binary or JSON lines).")
@click.option("--k", default=DEFAULT_K, show_default=True, type=int,
              help="Neighbors per node.")
@click.option("--temp", "temperature", default=DEFAULT_TEMPERATURE,
              show_default=True, type=float, help="Similarity temperature.")
@click.option("--out", "out_path", required=True, type=str,
              help="Output graph file.")
@click.pass_context
@_fail_cleanly
def build(ctx, features_path, k, temperature, out_path):
    """Build the neighborhood graph for a feature file."""
    click.echo(f"building graph: k={k} temp={temperature}")
    features = _read_features_file(features_path)
    started = time.perf_counter()
    graph = build_knn_graph(features, k=k, temperature=temperature,
                            threads=ctx.obj.get("threads"))
    elapsed = time.perf_counter() - started
    with open(out_path, "wb") as fh:
        save_graph(fh, graph, features)
    click.echo(f"samples: {features.n}  dims: {features.d}")
    click.echo(f"edges: {graph.adjacency.nnz}  build time: {elapsed:.2f}s")
    click.echo(f"wrote {out_path}")


@main.command(name="propagate")
@click.option("--graph", "graph_path", required=True, type=str,
              help="Graph file from 'lg build'.")
@click.option("--labels", "labels_path", required=True, type=str,
              help="Given labels (JSON lines).")
@click.option("--iters", default=DEFAULT_ITERATIONS, show_default=True,
              type=int, help="Propagation rounds.")
@click.option("--out", "out_path", required=True, type=str,
              help="Output soft labels (JSON lines).")
@_fail_cleanly
def propagate_cmd(graph_path, labels_path, iters, out_path):
    """Propagate given labels over a graph and write soft labels."""
    if not Path(graph_path).exists():
        raise NotFoundError(f"graph file not found: {graph_path}")
    graph, features = load_graph(graph_path)
    labels = _read_truth_file(labels_path, features)
    soft = propagate(graph, labels, iterations=iters)
    with open(out_path, "w", encoding="utf-8") as fh:
        for line in soft_label_lines(soft, features.ids):
            fh.write(line + "\n")
    given = int((labels.given >= 0).sum())
    click.echo(f"propagated {given} given labels over {features.n} samples "
               f"({iters} rounds)")
    click.echo(f"wrote {out_path}")


@main.command(name="simulate-al")
@click.option("--graph", "graph_path", required=True, type=str)
@click.option("--truth", "truth_path", required=True, type=str,
              help="Ground-truth labels for the oracle and evaluation.")
@click.option("--batch", required=True, type=int, help="Labels per round.")
@click.option("--budget", required=True, type=int, help="Total labels to spend.")
@click.option("--seeds", default="0", show_default=True, type=str,
              help="Comma-separated seeds, one run each.")
@click.option("--ablation", default="full", show_default=True,
              type=click.Choice(["full", "labeled-only"]),
              help="'labeled-only' drops unlabeled nodes from the graph.")
@click.option("--eval-frac", default=0.1, show_default=True, type=float,
              help="Held-out fraction used for accuracy.")
@click.option("--iters", default=DEFAULT_ITERATIONS, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=str, help="Output CSV.")
@_fail_cleanly
def simulate_al(graph_path, truth_path, batch, budget, seeds, ablation,
                eval_frac, iters, out_path):
    """Replay a simulated annotation campaign against known labels."""
    if not Path(graph_path).exists():
        raise NotFoundError(f"graph file not found: {graph_path}")
    graph, features = load_graph(graph_path)
    truth = _read_truth_file(truth_path, features)
    if (truth.given < 0).any():
        raise ParameterError("truth file must label every sample")
    seed_list = _parse_list(seeds, int, "seeds")

    rows = []
    for seed in seed_list:
        eval_rows = carve_eval_split(features.n, eval_frac, seed)
        config = ActiveLearningConfig(
            batch_size=batch,
            budget=budget,
            seed=seed,
            eval_split=tuple(int(i) for i in eval_rows),
            num_classes=truth.num_classes,
            include_unlabeled_pool=(ablation == "full"),
            iterations=iters,
        )
        curve = run_active_learning(graph, truth.given, config,
                                    features=features)
        for spent, accuracy in curve:
            rows.append((seed, spent, accuracy))
        click.echo(f"seed {seed}: final accuracy {curve[-1][1]:.4f} "
                   f"at {curve[-1][0]} labels")

    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("seed,labels_spent,accuracy\n")
        for seed, spent, accuracy in rows:
            fh.write(f"{seed},{spent},{accuracy:.6f}\n")
    click.echo(f"wrote {out_path}")


@main.command(name="simulate-noise")
@click.option("--graph", "graph_path", required=True, type=str)
@click.option("--truth", "truth_path", required=True, type=str)
@click.option("--rates", required=True, type=str,
              help="Comma-separated corruption rates in [0, 1].")
@click.option("--iters", default=DEFAULT_ITERATIONS, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--eval-frac", default=0.1, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=str, help="Output CSV.")
@_fail_cleanly
def simulate_noise(graph_path, truth_path, rates, iters, seed, eval_frac,
                   out_path):
    """Corrupt labels at given rates and track noise across propagation."""
    if not Path(graph_path).exists():
        raise NotFoundError(f"graph file not found: {graph_path}")
    graph, features = load_graph(graph_path)
    truth = _read_truth_file(truth_path, features)
    if (truth.given < 0).any():
        raise ParameterError("truth file must label every sample")
    rate_list = _parse_list(rates, float, "rates")

    trace_rows = []
    summary_rows = []
    for rate in rate_list:
        eval_rows = carve_eval_split(features.n, eval_frac, seed)
        config = NoiseExperimentConfig(
            noise_rate=rate, iterations=iters, seed=seed,
            eval_split=tuple(int(i) for i in eval_rows),
        )
        result = run_noise_study(graph, truth.given, config)
        for step, noise in enumerate(result.noise_trace):
            trace_rows.append((rate, step, noise))
        summary_rows.append((rate, result.accuracy_propagated,
                             result.accuracy_corrupted))
        click.echo(f"rate {rate}: noise {result.noise_trace[0]:.3f} -> "
                   f"{result.noise_trace[-1]:.3f}, accuracy "
                   f"{result.accuracy_propagated:.4f} vs "
                   f"{result.accuracy_corrupted:.4f} uncorrected")

    # one iteration-trace section grouped by rate, then a summary section
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("rate,iteration,noise_level\n")
        for rate, step, noise in trace_rows:
            fh.write(f"{rate},{step},{noise:.6f}\n")
        fh.write("noise_rate,acc_lp,acc_baseline\n")
        for rate, acc_lp, acc_baseline in summary_rows:
            fh.write(f"{rate},{acc_lp:.6f},{acc_baseline:.6f}\n")
    click.echo(f"wrote {out_path}")


@main.command(name="gen-blobs")
@click.option("--classes", required=True, type=int)
@click.option("--n", required=True, type=int, help="Total samples.")
@click.option("--dim", required=True, type=int)
@click.option("--sep", default=4.0, show_default=True, type=float,
              help="Center separation in noise-scale units.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=str,
              help="Output feature file (binary).")
@click.option("--truth-out", "truth_path", default=None, type=str,
              help="Also write the generating labels (JSON lines).")
@_fail_cleanly
def gen_blobs(classes, n, dim, sep, seed, out_path, truth_path):
    """Generate a synthetic clustered dataset on the unit sphere."""
    features, truth = make_blobs(classes=classes, n=n, dim=dim,
                                 separation=sep, seed=seed)
    write_features(features, out_path)
    click.echo(f"wrote {out_path} ({n} samples, {dim} dims, "
               f"{classes} classes, separation {sep})")
    if truth_path is not None:
        with open(truth_path, "w", encoding="utf-8") as fh:
            for row, cls in enumerate(truth):
                fh.write(json.dumps({"id": features.ids[row],
                                     "class": int(cls)}) + "\n")
        click.echo(f"wrote {truth_path}")


@main.command()
@click.option("--store", "store_root", required=True, type=str,
              help="Session store directory (created if missing).")
@click.option("--addr", default="127.0.0.1:8765", show_default=True, type=str,
              help="host:port to bind.")
@_fail_cleanly
def serve(store_root, addr):
    """Run the annotation HTTP service."""
    import uvicorn

    from .service import create_app

    host, _, port_text = addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise ParameterError(f"addr must be host:port, got {addr!r}")
    app = create_app(store_root)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")


if __name__ == "__main__":
    main()
