"""Smoke tests for the python bindings and the benchmark CLI."""

import json
import os
import subprocess

import numpy as np
import pytest

import rpkm


def test_generate_mixture_shapes_and_determinism():
    points, labels = rpkm.generate_mixture(n=500, d=2, components=3, seed=7)
    assert points.shape == (500, 2)
    assert len(labels) == 500
    assert set(labels) <= {0, 1, 2}

    again, labels2 = rpkm.generate_mixture(n=500, d=2, components=3, seed=7)
    assert np.array_equal(points, again)
    assert labels == labels2


def test_partition_sizes_respect_grid_bound():
    points, _ = rpkm.generate_mixture(n=2000, d=2, components=3, seed=1)
    sizes = rpkm.partition_sizes(points, m=5)
    assert len(sizes) == 5
    for level, cells in enumerate(sizes, start=1):
        assert cells <= min(2000, 4**level)
    assert sizes == sorted(sizes)


def test_rpkm_runs_and_reports_steps():
    points, _ = rpkm.generate_mixture(n=3000, d=2, components=3, seed=11)
    result = rpkm.rpkm(points, k=3, m=5, seed=42, evaluate=True)
    assert result["centroids"].shape == (3, 2)
    steps = result["steps"]
    assert steps
    evals = [s["dist_evals"] for s in steps]
    assert evals == sorted(evals)  # cumulative
    for step in steps:
        assert step["std_error"] <= 1e-12

    again = rpkm.rpkm(points, k=3, m=5, seed=42, evaluate=True)
    assert np.array_equal(result["centroids"], again["centroids"])


def test_kmeanspp_lloyd_pipeline_reduces_error():
    points, _ = rpkm.generate_mixture(n=1000, d=2, components=3, seed=3)
    centroids, seed_evals = rpkm.kmeanspp(points, k=3, seed=5)
    assert centroids.shape == (3, 2)
    assert seed_evals == 1000 * 2

    result = rpkm.lloyd(points, centroids)
    trace = result["error_trace"]
    assert trace[-1] <= trace[0]
    assert all(b <= a + 1e-9 * (1 + abs(a)) for a, b in zip(trace, trace[1:]))


def test_weighted_lloyd_on_singletons_matches_lloyd():
    points, _ = rpkm.generate_mixture(n=200, d=2, components=2, seed=9)
    init, _ = rpkm.kmeanspp(points, k=2, seed=1)
    direct = rpkm.lloyd(points, init)
    weighted = rpkm.weighted_lloyd(points, [1] * len(points), init)
    assert direct["error_trace"] == weighted["error_trace"]
    assert np.array_equal(direct["centroids"], weighted["centroids"])


def test_minibatch_budget_is_exact():
    points, _ = rpkm.generate_mixture(n=400, d=2, components=3, seed=13)
    init, _ = rpkm.kmeanspp(points, k=3, seed=2)
    centers, evals = rpkm.minibatch_kmeans(points, init, b=50, t=20, seed=3)
    assert centers.shape == (3, 2)
    assert evals == 50 * 20 * 3


def test_std_error_nonpositive():
    points, _ = rpkm.generate_mixture(n=1500, d=2, components=3, seed=21)
    result = rpkm.rpkm(points, k=3, m=4, seed=8)
    rho = rpkm.std_error(points, result["centroids"])
    assert rho <= 1e-12


@pytest.fixture(scope="module")
def bench_bin():
    path = os.environ.get("RPKM_BENCH_BIN")
    if not path or not os.path.exists(path):
        pytest.skip("RPKM_BENCH_BIN not set")
    return path


def test_cli_generate_run_summarize(bench_bin, tmp_path):
    dataset = tmp_path / "data.csv"
    subprocess.run(
        [bench_bin, "generate", "--n", "500", "--d", "2", "--components", "3",
         "--seed", "5", "--out", str(dataset)],
        check=True,
    )
    assert dataset.exists()
    rows = dataset.read_text().strip().splitlines()
    assert len(rows) == 500
    assert len(rows[0].split(",")) == 2

    records = tmp_path / "records.jsonl"
    run_args = [
        bench_bin, "run", "--algorithms", "rpkm,kmpp,mb", "--n", "400",
        "--d", "2", "--K", "3", "--m", "3", "--b", "40", "--t", "10",
        "--replicates", "2", "--seed", "99", "--evaluation",
        "--out", str(records),
    ]
    subprocess.run(run_args, check=True)
    lines = records.read_text().strip().splitlines()
    assert len(lines) == (1 + 1 + 1) * 2
    parsed = [json.loads(line) for line in lines]
    assert {r["algorithm"] for r in parsed} == {"rpkm", "kmpp", "mb"}
    for record in parsed:
        assert record["std_error"] <= 1e-12

    # Byte-identical rerun under the same seed.
    rerun = tmp_path / "records2.jsonl"
    subprocess.run(run_args[:-1] + [str(rerun)], check=True)
    assert records.read_bytes() == rerun.read_bytes()

    table = tmp_path / "summary.csv"
    subprocess.run(
        [bench_bin, "summarize", "--in", str(records), "--out", str(table),
         "--group-by", "algorithm,level"],
        check=True,
    )
    header, *body = table.read_text().strip().splitlines()
    assert header.startswith("algorithm,level,count")
    assert body


def test_cli_rejects_bad_config(bench_bin):
    result = subprocess.run(
        [bench_bin, "run", "--n", "100", "--d", "2", "--K", "3",
         "--seed", "1", "--algorithms", "bogus"],
        capture_output=True,
    )
    assert result.returncode == 1

    missing_csv = subprocess.run(
        [bench_bin, "run", "--n", "100", "--d", "2", "--K", "3", "--seed", "1",
         "--csv", "/nonexistent/data.csv", "--out", "-"],
        capture_output=True,
    )
    assert missing_csv.returncode == 2
