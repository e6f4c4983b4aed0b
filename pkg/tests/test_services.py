import numpy as np
import pytest
from pydantic import ValidationError

from cbSpMV.generators.matrixMarket import MatrixMarketGenerator
from cbSpMV.models.settings import PipelineConfig
from cbSpMV.services.pipeline_service import THREADS_ENV, PipelineService
from cbSpMV.services.report_service import ReportService, relative_error
from matrices import identity, random_matrix


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "pipeline.yaml"
    path.write_text("th2: 96\nmode: parallel_tb\nthreads: 2\nenable_balance: false\n")
    return path


def test_defaults():
    cfg = PipelineService.resolve_config(environ={})
    assert cfg == PipelineConfig()
    assert (cfg.th0, cfg.th1, cfg.th2, cfg.warps_per_tb) == (0.15, 32, 128, 8)
    assert (cfg.mode, cfg.enable_agg, cfg.enable_balance, cfg.threads) == ("sequential", "auto", True, 0)


def test_yaml_then_environment_then_overrides(config_file):
    cfg = PipelineService.resolve_config(config_file, environ={})
    assert (cfg.th2, cfg.mode, cfg.threads, cfg.enable_balance) == (96, "parallel_tb", 2, False)

    cfg = PipelineService.resolve_config(config_file, environ={THREADS_ENV: "6"})
    assert cfg.threads == 6

    cfg = PipelineService.resolve_config(config_file, {"threads": 3, "th2": None, "mode": "sequential"},
                                         environ={THREADS_ENV: "6"})
    assert (cfg.threads, cfg.th2, cfg.mode) == (3, 96, "sequential")


def test_environment_reaches_the_cli_defaults(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "5")
    assert PipelineService.resolve_config().threads == 5


@pytest.mark.parametrize("overrides", [
    {"th0": 1.5}, {"th1": 0}, {"th2": 300}, {"th1": 64, "th2": 32}, {"warps_per_tb": 0}, {"mode": "gpu"},
    {"enable_agg": "sometimes"}, {"threads": -1},
])
def test_invalid_settings(overrides):
    with pytest.raises(ValidationError):
        PipelineService.resolve_config(overrides=overrides, environ={})


def test_bad_thread_environment():
    with pytest.raises(ValidationError):
        PipelineService.resolve_config(environ={THREADS_ENV: "many"})


def test_build_summary(rng):
    m = random_matrix(rng, 500, 500, 0.001)
    _, summary = PipelineService.build(m)
    assert summary.nnz == m.nnz
    assert summary.aggregation_applied == (summary.super_sparse_fraction >= 0.15)
    assert summary.balanced
    assert sum(summary.format_histogram.values()) == summary.block_count


def test_load_matrix_from_container(tmp_path, rng):
    m = random_matrix(rng, 70, 40, 0.1)
    source, container = tmp_path / "m.mtx", tmp_path / "m.cbsm"
    MatrixMarketGenerator.write(m, source)
    PipelineService.convert(source, container, PipelineConfig(enable_agg="on"))
    assert PipelineService.load_matrix(container) == m
    assert PipelineService.load_packed(container).agg is not None


def test_verify_service_passes_on_identity(tmp_path):
    path = tmp_path / "id.mtx"
    MatrixMarketGenerator.write(identity(40), path)
    report = ReportService.verify(path, PipelineConfig(enable_agg="off", enable_balance=False))
    assert report.passed
    assert report.variant == "base/sequential"
    assert report.max_relative_error == 0.0


def test_spmv_service_defaults_to_ones(tmp_path):
    path = tmp_path / "id.mtx"
    MatrixMarketGenerator.write(identity(20), path)
    y, timing = ReportService.spmv(path, iters=3)
    assert y.tolist() == [1.0] * 20
    assert timing.gflops >= 0.0
    with pytest.raises(ValueError):
        ReportService.spmv(path, iters=0)


def test_relative_error_scaling():
    assert relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert relative_error(np.array([0.5]), np.array([0.25])) == 0.25
    assert relative_error(np.array([110.0]), np.array([100.0])) == pytest.approx(0.1)
    assert relative_error(np.zeros(0), np.zeros(0)) == 0.0
