import json

import numpy as np
import pandas as pd
import pytest

from cbSpMV.cli.cli import EXIT_DOMAIN_ERROR, EXIT_OK, EXIT_USAGE_ERROR, main
from cbSpMV.generators.matrixMarket import MatrixMarketGenerator
from cbSpMV.generators.vectorFile import VectorFileGenerator
from cbSpMV.utils.container import CBSM_HEADER
from cbSpMV.utils.io import IOUtils
from cbSpMV.utils.kernels import SpMVKernels
from matrices import identity, matrix_with_block_nnz, random_matrix


def run(capsys, *argv):
    code = main(["--quiet", *map(str, argv)])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == EXIT_OK and out.strip() else None)


@pytest.fixture
def diag16(tmp_path):
    path = tmp_path / "diag-16.mtx"
    MatrixMarketGenerator.write(identity(16), path)
    return path


def test_convert_identity(capsys, tmp_path, diag16):
    out = tmp_path / "diag-16.cbsm"
    code, summary = run(capsys, "convert", diag16, out)
    assert code == EXIT_OK
    assert summary["block_count"] == 1
    assert summary["aggregation_applied"] is True
    assert summary["format_histogram"] == {"COO": 1, "CSR": 0, "DENSE": 0}
    assert summary["preprocess_seconds"] >= 0.0
    assert out.read_bytes()[:4] == b"CBSM"


def test_convert_with_aggregation_off(capsys, tmp_path, diag16):
    code, summary = run(capsys, "convert", diag16, tmp_path / "out.cbsm", "--agg", "off")
    assert code == EXIT_OK
    assert summary["aggregation_applied"] is False


def test_convert_dense_threshold(capsys, tmp_path):
    path = tmp_path / "three.mtx"
    MatrixMarketGenerator.write(matrix_with_block_nnz([50, 100, 200]), path)
    _, default = run(capsys, "convert", path, tmp_path / "a.cbsm")
    _, lowered = run(capsys, "convert", path, tmp_path / "b.cbsm", "--th2", "64")
    assert default["format_histogram"] == {"COO": 0, "CSR": 2, "DENSE": 1}
    assert lowered["format_histogram"] == {"COO": 0, "CSR": 1, "DENSE": 2}


def test_spmv_ones_on_identity(capsys, tmp_path, diag16):
    container = tmp_path / "diag-16.cbsm"
    run(capsys, "convert", diag16, container)
    y_path = tmp_path / "y.txt"
    code, timing = run(capsys, "spmv", container, "--ones", "-o", y_path, "--iters", 1)
    assert code == EXIT_OK
    assert timing["iters"] == 1 and timing["nnz"] == 16
    assert timing["output"] == str(y_path)
    assert IOUtils.read_vector(y_path).tolist() == [1.0] * 16


def test_spmv_output_matches_reference(capsys, tmp_path, rng):
    m = random_matrix(rng, 200, 150, 0.04)
    matrix_path, x_path, y_path = tmp_path / "m.mtx", tmp_path / "x.txt", tmp_path / "y.txt"
    MatrixMarketGenerator.write(m, matrix_path)
    x = rng.standard_normal(150)
    VectorFileGenerator.write(x, x_path)
    code, _ = run(capsys, "spmv", matrix_path, "--x", x_path, "-o", y_path, "--iters", 2, "--mode", "parallel_tb")
    assert code == EXIT_OK
    y_ref = SpMVKernels.spmv_reference_csr(m, x)
    np.testing.assert_allclose(IOUtils.read_vector(y_path), y_ref, rtol=1e-10, atol=1e-10)


def test_spmv_dimension_mismatch_is_usage_error(capsys, tmp_path, diag16):
    x_path = tmp_path / "x.txt"
    VectorFileGenerator.write(np.ones(15), x_path)
    code, _ = run(capsys, "spmv", diag16, "--x", x_path, "-o", tmp_path / "y.txt", "--iters", 1)
    assert code == EXIT_USAGE_ERROR


def test_verify_matrix_market(capsys, tmp_path, rng):
    path = tmp_path / "m.mtx"
    MatrixMarketGenerator.write(random_matrix(rng, 300, 300, 0.02), path)
    for mode in ("sequential", "parallel_tb"):
        code, report = run(capsys, "verify", path, "--mode", mode, "--threads", 2)
        assert code == EXIT_OK
        assert report["passed"] is True
        assert report["vectors"] == 3
        assert report["max_relative_error"] <= 1e-10
        assert report["variant"].endswith(mode)


def test_verify_container(capsys, tmp_path, diag16):
    container = tmp_path / "diag-16.cbsm"
    run(capsys, "convert", diag16, container)
    code, report = run(capsys, "verify", container)
    assert code == EXIT_OK
    assert report["variant"] == "container/sequential"


def test_verify_bad_magic(capsys, caplog, tmp_path, diag16):
    container = tmp_path / "bad.cbsm"
    run(capsys, "convert", diag16, container)
    container.write_bytes(b"XXXX" + container.read_bytes()[4:])
    code, _ = run(capsys, "verify", container)
    assert code == EXIT_DOMAIN_ERROR
    assert "bad magic" in caplog.text


def test_verify_mismatched_vector(capsys, tmp_path, diag16):
    x_path = tmp_path / "x.txt"
    VectorFileGenerator.write(np.ones(3), x_path)
    code, _ = run(capsys, "verify", diag16, "--x", x_path)
    assert code == EXIT_USAGE_ERROR


def test_stats_report(capsys, tmp_path):
    path = tmp_path / "thirteen.mtx"
    MatrixMarketGenerator.write(matrix_with_block_nnz([13]), path)
    code, report = run(capsys, "stats", path)
    assert code == EXIT_OK
    assert report["block_stats"]["histogram8"] == [1, 0, 0, 0, 0, 0, 0, 0]
    assert report["block_stats"]["super_sparse_fraction"] == 1.0
    assert report["should_aggregate"] is True
    storage = report["storage"]
    assert (storage["csr_bytes"], storage["bsr_bytes"], storage["cb_bytes"]) == (224, 2060, 138)


def test_balance_report(capsys, tmp_path):
    path = tmp_path / "skewed.mtx"
    MatrixMarketGenerator.write(matrix_with_block_nnz([256] * 8 + [1] * 8), path)
    code, report = run(capsys, "balance-report", path, "--agg", "off")
    assert code == EXIT_OK
    assert report["tb_count"] == 2
    assert report["pre_loads"] == [2048, 8]
    assert report["post_loads"] == [1028, 1028]
    assert report["post"]["stddev"] <= report["pre"]["stddev"]
    assert set(report["pre"]) == {"mean", "stddev", "max", "min"}


def test_cache_sim_report(capsys, tmp_path, rng):
    path = tmp_path / "m.mtx"
    MatrixMarketGenerator.write(random_matrix(rng, 400, 400, 0.01), path)
    code, report = run(capsys, "cache-sim", path, "--level", "l1")
    assert code == EXIT_OK
    assert report["config"] == "128KB/128B/4-way LRU"
    for fmt in ("csr", "cb"):
        row = report[fmt]
        assert set(row) == {"format", "config", "accesses", "hits", "hit_rate"}
        assert row["format"] == fmt
        assert row["config"] == report["config"]
        assert isinstance(row["accesses"], int) and isinstance(row["hits"], int)
        assert row["hit_rate"] == pytest.approx(row["hits"] / row["accesses"])


def test_cache_sim_custom_geometry(capsys, tmp_path, diag16):
    code, report = run(capsys, "cache-sim", diag16, "--capacity", 1024, "--line", 64, "--assoc", 2)
    assert code == EXIT_OK
    assert report["config"] == "1KB/64B/2-way LRU"


def test_bench_writes_csv(capsys, tmp_path, rng):
    path, csv_path = tmp_path / "m.mtx", tmp_path / "bench.csv"
    MatrixMarketGenerator.write(random_matrix(rng, 256, 256, 0.03), path)
    code, report = run(capsys, "bench", path, "--iters", 1, "--csv", csv_path)
    assert code == EXIT_OK
    assert [row["variant"] for row in report["rows"]] == ["base", "agg", "balance", "agg+balance"]
    table = pd.read_csv(csv_path)
    assert table["variant"].tolist() == ["base", "agg", "balance", "agg+balance"]
    assert (table["gflops"] >= 0).all()


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["convert"],
    ["spmv", "m.cbsm", "-o", "y.txt"],
    ["spmv", "m.cbsm", "--ones", "--x", "x.txt", "-o", "y.txt"],
    ["convert", "a.mtx", "b.cbsm", "--mode", "gpu"],
])
def test_usage_errors(capsys, argv):
    assert main(argv) == EXIT_USAGE_ERROR


def test_invalid_thresholds_are_usage_errors(capsys, tmp_path, diag16):
    code, _ = run(capsys, "convert", diag16, tmp_path / "o.cbsm", "--th1", 200, "--th2", 100)
    assert code == EXIT_USAGE_ERROR


@pytest.mark.parametrize("iters", [0, -3])
def test_non_positive_iteration_count_is_usage_error(capsys, tmp_path, diag16, iters):
    code, _ = run(capsys, "spmv", diag16, "--ones", "-o", tmp_path / "y.txt", "--iters", iters)
    assert code == EXIT_USAGE_ERROR
    assert not (tmp_path / "y.txt").exists()
    code, _ = run(capsys, "bench", diag16, "--iters", iters)
    assert code == EXIT_USAGE_ERROR


def test_corrupt_block_index_exits_cleanly(capsys, caplog, tmp_path, diag16):
    container = tmp_path / "bad.cbsm"
    run(capsys, "convert", diag16, container)
    data = bytearray(container.read_bytes())
    data[CBSM_HEADER.size:CBSM_HEADER.size + 4] = (7).to_bytes(4, "little")
    container.write_bytes(bytes(data))
    code, _ = run(capsys, "spmv", container, "--ones", "-o", tmp_path / "y.txt", "--iters", 1)
    assert code == EXIT_DOMAIN_ERROR
    assert "block grid" in caplog.text


def test_broken_config_file_is_usage_error(capsys, tmp_path, diag16):
    config = tmp_path / "bad.yaml"
    config.write_text("th1: [unclosed\n")
    code, _ = run(capsys, "convert", diag16, tmp_path / "o.cbsm", "--config", config)
    assert code == EXIT_USAGE_ERROR


def test_missing_input_is_domain_error(capsys, tmp_path):
    code, _ = run(capsys, "convert", tmp_path / "absent.mtx", tmp_path / "o.cbsm")
    assert code == EXIT_DOMAIN_ERROR


def test_malformed_matrix_is_domain_error(capsys, caplog, tmp_path):
    path = tmp_path / "broken.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n")
    code, _ = run(capsys, "stats", path)
    assert code == EXIT_DOMAIN_ERROR
    assert "broken.mtx" in caplog.text
