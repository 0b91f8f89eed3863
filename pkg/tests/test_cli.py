"""Command line surface: thin adapters over the library with clean exits."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from labelgraph import (
    load_graph,
    propagate,
    read_features,
    read_label_file,
    soft_label_lines,
)
from labelgraph.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """Blob features, truth labels, and a built graph shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli-data")
    runner = CliRunner()
    features = root / "features.lgf"
    truth = root / "truth.jsonl"
    graph = root / "graph.bin"
    gen = runner.invoke(main, [
        "gen-blobs", "--classes", "3", "--n", "150", "--dim", "16",
        "--sep", "6", "--seed", "5",
        "--out", str(features), "--truth-out", str(truth)])
    assert gen.exit_code == 0, gen.output
    build = runner.invoke(main, [
        "build", "--features", str(features), "--k", "6", "--temp", "0.1",
        "--out", str(graph)])
    assert build.exit_code == 0, build.output
    return root, features, truth, graph


def test_build_echoes_parameters_and_shape(runner, dataset):
    root, features, _, _ = dataset
    out = root / "echo.bin"
    result = runner.invoke(main, [
        "build", "--features", str(features), "--k", "15", "--temp", "0.02",
        "--out", str(out)])
    assert result.exit_code == 0
    assert "k=15 temp=0.02" in result.output
    assert "samples: 150  dims: 16" in result.output
    assert out.exists()


def test_build_missing_features_exits_2(runner, tmp_path):
    result = runner.invoke(main, [
        "build", "--features", str(tmp_path / "nope.lgf"),
        "--out", str(tmp_path / "g.bin")])
    assert result.exit_code == 2
    assert "features file not found" in result.output


def test_build_invalid_k_exits_2(runner, dataset):
    root, features, _, _ = dataset
    result = runner.invoke(main, [
        "build", "--features", str(features), "--k", "150",
        "--out", str(root / "bad.bin")])
    assert result.exit_code == 2
    assert "k must be < n" in result.output


def test_propagate_keeps_clamped_rows_intact(runner, dataset, tmp_path):
    _, features, truth, graph = dataset
    # label a slice of the truth file, leave the rest unlabeled
    lines = truth.read_text().splitlines()[:30]
    labels = tmp_path / "labels.jsonl"
    labels.write_text("\n".join(lines) + "\n")
    out = tmp_path / "soft.jsonl"
    result = runner.invoke(main, [
        "propagate", "--graph", str(graph), "--labels", str(labels),
        "--iters", "10", "--out", str(out)])
    assert result.exit_code == 0
    assert "propagated 30 given labels over 150 samples" in result.output
    soft = {record["id"]: record
            for record in map(json.loads, out.read_text().splitlines())}
    assert len(soft) == 150
    for line in lines:
        given = json.loads(line)
        row = soft[given["id"]]
        assert row["pseudo"] == given["class"]
        assert np.argmax(row["scores"]) == given["class"]


def test_propagate_empty_labels_exits_2(runner, dataset, tmp_path):
    _, _, _, graph = dataset
    labels = tmp_path / "empty.jsonl"
    labels.write_text("")
    result = runner.invoke(main, [
        "propagate", "--graph", str(graph), "--labels", str(labels),
        "--out", str(tmp_path / "soft.jsonl")])
    assert result.exit_code == 2


def test_propagate_matches_library_call(runner, dataset, tmp_path):
    """The command is a thin adapter: byte-for-byte the library's output."""
    _, features_path, truth, graph_path = dataset
    out = tmp_path / "soft.jsonl"
    result = runner.invoke(main, [
        "propagate", "--graph", str(graph_path), "--labels", str(truth),
        "--iters", "7", "--out", str(out)])
    assert result.exit_code == 0

    graph, features = load_graph(graph_path)
    with open(truth, encoding="utf-8") as fh:
        state = read_label_file(fh, features.index_of(), features.n)
    soft = propagate(graph, state, iterations=7)
    expected = "".join(line + "\n" for line in soft_label_lines(soft, features.ids))
    assert out.read_text() == expected


def test_simulate_al_is_deterministic(runner, dataset, tmp_path):
    _, _, truth, graph = dataset
    args = ["simulate-al", "--graph", str(graph), "--truth", str(truth),
            "--batch", "10", "--budget", "40", "--seeds", "1,2"]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    res_a = runner.invoke(main, args + ["--out", str(first)])
    res_b = runner.invoke(main, args + ["--out", str(second)])
    assert res_a.exit_code == 0, res_a.output
    assert res_b.exit_code == 0
    assert first.read_bytes() == second.read_bytes()

    rows = first.read_text().splitlines()
    assert rows[0] == "seed,labels_spent,accuracy"
    # 2 seeds x 4 budget points
    assert len(rows) == 1 + 2 * 4
    spent = [int(r.split(",")[1]) for r in rows[1:5]]
    assert spent == [10, 20, 30, 40]


def test_simulate_al_full_budget_reaches_full_accuracy(runner, dataset, tmp_path):
    _, _, truth, graph = dataset
    out = tmp_path / "full.csv"
    result = runner.invoke(main, [
        "simulate-al", "--graph", str(graph), "--truth", str(truth),
        "--batch", "135", "--budget", "135", "--seeds", "3",
        "--out", str(out)])
    assert result.exit_code == 0, result.output
    last = out.read_text().splitlines()[-1]
    assert float(last.split(",")[2]) == 1.0


def test_simulate_noise_rate_zero_trace_is_flat(runner, dataset, tmp_path):
    _, _, truth, graph = dataset
    out = tmp_path / "noise.csv"
    result = runner.invoke(main, [
        "simulate-noise", "--graph", str(graph), "--truth", str(truth),
        "--rates", "0,0.5", "--iters", "10", "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "rate,iteration,noise_level"
    split = lines.index("noise_rate,acc_lp,acc_baseline")
    trace = [line.split(",") for line in lines[1:split]]
    assert len(trace) == 2 * 11  # two rates, iterations 0..10
    zero_rate = [float(level) for rate, _, level in trace if rate == "0.0"]
    assert zero_rate == [0.0] * 11
    half_rate = [float(level) for rate, _, level in trace if rate == "0.5"]
    assert half_rate[-1] < half_rate[0]
    summary = [line.split(",") for line in lines[split + 1:]]
    assert [row[0] for row in summary] == ["0.0", "0.5"]


def test_gen_blobs_is_deterministic(runner, tmp_path):
    args = ["gen-blobs", "--classes", "4", "--n", "80", "--dim", "8",
            "--seed", "9"]
    first = tmp_path / "a.lgf"
    second = tmp_path / "b.lgf"
    assert runner.invoke(main, args + ["--out", str(first)]).exit_code == 0
    assert runner.invoke(main, args + ["--out", str(second)]).exit_code == 0
    assert first.read_bytes() == second.read_bytes()
    matrix = read_features(first.read_bytes())
    assert matrix.n == 80
    assert matrix.d == 8


def test_gen_blobs_single_class_exits_2(runner, tmp_path):
    result = runner.invoke(main, [
        "gen-blobs", "--classes", "1", "--n", "10", "--dim", "8",
        "--out", str(tmp_path / "x.lgf")])
    assert result.exit_code == 2
    assert "need >= 2 classes" in result.output


def test_truth_file_must_cover_every_sample(runner, dataset, tmp_path):
    _, _, truth, graph = dataset
    partial = tmp_path / "partial.jsonl"
    partial.write_text("\n".join(truth.read_text().splitlines()[:10]) + "\n")
    result = runner.invoke(main, [
        "simulate-al", "--graph", str(graph), "--truth", str(partial),
        "--batch", "5", "--budget", "10", "--out", str(tmp_path / "o.csv")])
    assert result.exit_code == 2
    assert "must label every sample" in result.output
