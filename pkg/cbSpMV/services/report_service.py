import time
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from cbSpMV.generators.vectorFile import VectorFileGenerator
from cbSpMV.models.matrix import TripletMatrix
from cbSpMV.models.packed import PackedMatrix
from cbSpMV.models.reports import (
    BalanceReport, BenchReport, BenchRow, CacheSimReport, SpMVTiming, StatsReport, VerifyReport,
)
from cbSpMV.models.settings import ACCEPTANCE_CACHE, CacheConfig, PipelineConfig
from cbSpMV.services.pipeline_service import CONTAINER_SUFFIX, PipelineService
from cbSpMV.utils.balance import LoadBalancer
from cbSpMV.utils.blocking import BlockingUtils
from cbSpMV.utils.cache_sim import CacheSimulator
from cbSpMV.utils.colagg import ColumnAggregation
from cbSpMV.utils.container import ContainerIO
from cbSpMV.utils.io import IOUtils, PathLike
from cbSpMV.utils.kernels import SpMVKernels
from cbSpMV.utils.packing import PackUtils
from cbSpMV.utils.storage import StorageModel
from cbSpMV.utils.traces import TraceGenerator

VERIFY_SEED = 20240917
VERIFY_VECTORS = 3
VERIFY_TOLERANCE = 1e-10
DEFAULT_ITERS = 1000

BENCH_VARIANTS = {
    "base": {"enable_agg": "off", "enable_balance": False},
    "agg": {"enable_agg": "on", "enable_balance": False},
    "balance": {"enable_agg": "off", "enable_balance": True},
    "agg+balance": {"enable_agg": "on", "enable_balance": True},
}


def relative_error(y: np.ndarray, y_ref: np.ndarray) -> float:
    """max |y - y_ref| scaled by max(1, max |y_ref|)."""
    if len(y_ref) == 0:
        return 0.0
    return float(np.max(np.abs(y - y_ref)) / max(1.0, float(np.max(np.abs(y_ref)))))


class ReportService:
    @staticmethod
    def stats(path: PathLike, cfg: Optional[PipelineConfig] = None) -> StatsReport:
        cfg = cfg or PipelineConfig()
        m = PipelineService.load_matrix(path)
        blocked = BlockingUtils.partition(m)
        block_stats = BlockingUtils.compute_block_stats(blocked)
        packed, _ = PipelineService.build(m, cfg)
        storage = StorageModel.storage_model(m.n_rows, m.n_cols, m.nnz, blocked.block_count, blocked.blk_m)
        storage = storage.model_copy(update={"measured_cb_bytes": StorageModel.measured_bytes(packed)})
        return StatsReport(
            matrix=str(path),
            block_stats=block_stats,
            should_aggregate=ColumnAggregation.should_aggregate(block_stats, cfg.th0),
            storage=storage,
        )

    @staticmethod
    def balance_report(path: PathLike, cfg: Optional[PipelineConfig] = None) -> BalanceReport:
        """Per-thread-block loads of the contiguous grouping against the greedy schedule."""
        cfg = (cfg or PipelineConfig()).model_copy(update={"enable_balance": False})
        packed, _ = PipelineService.build(PipelineService.load_matrix(path), cfg)
        before = LoadBalancer.naive_schedule(packed, cfg.warps_per_tb)
        after = LoadBalancer.balance(packed, cfg.warps_per_tb).schedule
        pre, post = LoadBalancer.load_stats(before), LoadBalancer.load_stats(after)
        if post.stddev > pre.stddev:
            IOUtils.warn(f"Greedy schedule is less even than contiguous grouping on {path}: "
                         f"stddev {post.stddev:.3f} > {pre.stddev:.3f}")
        return BalanceReport(
            matrix=str(path),
            warps_per_tb=cfg.warps_per_tb,
            tb_count=after.tb_count,
            pre_loads=before.load_per_tb.tolist(),
            post_loads=after.load_per_tb.tolist(),
            pre=pre,
            post=post,
        )

    @staticmethod
    def cache_report(path: PathLike, cache: CacheConfig = ACCEPTANCE_CACHE,
                     cfg: Optional[PipelineConfig] = None) -> CacheSimReport:
        # one sequential pass in storage order; the balanced order is a concurrent schedule
        cfg = (cfg or PipelineConfig()).model_copy(update={"enable_balance": False})
        m = PipelineService.load_matrix(path)
        packed, _ = PipelineService.build(m, cfg)
        IOUtils.print(f"Simulating {cache!r}")
        csr = CacheSimulator.simulate(TraceGenerator.trace_csr(m), cache, "csr")
        cb = CacheSimulator.simulate(TraceGenerator.trace_cb(packed), cache, "cb")
        IOUtils.print(f"Hit rate: CSR {csr.hit_rate:.4f}, CB {cb.hit_rate:.4f}")
        return CacheSimReport.from_results(str(path), csr, cb)

    @staticmethod
    def verify_packed(m: TripletMatrix, packed: PackedMatrix, cfg: PipelineConfig,
                      extra: Optional[np.ndarray] = None) -> tuple[float, int]:
        rng = np.random.default_rng(VERIFY_SEED)
        vectors = [rng.uniform(-1.0, 1.0, m.n_cols) for _ in range(VERIFY_VECTORS)]
        if extra is not None:
            vectors.append(SpMVKernels.check_vector(extra, m.n_cols))
        worst = 0.0
        for x in vectors:
            y_ref = SpMVKernels.spmv_reference_csr(m, x)
            y = SpMVKernels.spmv_cb(packed, x, cfg.mode, cfg.threads, cfg.warps_per_tb)
            worst = max(worst, relative_error(y, y_ref))
        return worst, len(vectors)

    @staticmethod
    def verify(path: PathLike, cfg: Optional[PipelineConfig] = None, x_path: Optional[PathLike] = None,
               tolerance: float = VERIFY_TOLERANCE) -> VerifyReport:
        """
        Compare the CB kernels against the reference CSR product.

        A .mtx input runs the full pipeline first; a .cbsm input is checked as stored
        against the matrix it decodes to.
        """
        cfg = cfg or PipelineConfig()
        IOUtils.show_title("Verify")
        if Path(path).suffix == CONTAINER_SUFFIX:
            packed = ContainerIO.read(path)
            m = PackUtils.to_triplet(packed)
            variant = "container"
        else:
            m = PipelineService.load_matrix(path)
            packed, summary = PipelineService.build(m, cfg)
            variant = "+".join(name for name, on in (("agg", summary.aggregation_applied),
                                                     ("balance", summary.balanced)) if on) or "base"
        extra = IOUtils.read_vector(x_path) if x_path is not None else None
        worst, count = ReportService.verify_packed(m, packed, cfg, extra)
        passed = worst <= tolerance
        (IOUtils.print if passed else IOUtils.error)(
            f"max relative error {worst:.3e} over {count} vectors: {'PASS' if passed else 'FAIL'}")
        return VerifyReport(matrix=str(path), variant=f"{variant}/{cfg.mode}", vectors=count,
                            max_relative_error=worst, tolerance=tolerance, passed=passed)

    @staticmethod
    def time_spmv(packed: PackedMatrix, x: np.ndarray, cfg: PipelineConfig, iters: int) -> tuple[np.ndarray, float]:
        if iters < 1:
            raise ValueError("iters must be at least 1")
        y = SpMVKernels.spmv_cb(packed, x, cfg.mode, cfg.threads, cfg.warps_per_tb)
        start = time.perf_counter()
        for _ in range(iters):
            SpMVKernels.spmv_cb(packed, x, cfg.mode, cfg.threads, cfg.warps_per_tb)
        return y, (time.perf_counter() - start) / iters

    @staticmethod
    def gflops(nnz: int, seconds: float) -> float:
        return 2.0 * nnz / seconds / 1e9 if seconds > 0 else 0.0

    @staticmethod
    def spmv(path: PathLike, x: Optional[np.ndarray] = None, cfg: Optional[PipelineConfig] = None,
             iters: int = DEFAULT_ITERS, output: Optional[PathLike] = None) -> tuple[np.ndarray, SpMVTiming]:
        """
        Multiply the matrix by x (all ones when x is None), timing iters repetitions.

        Raises:
            DimensionMismatchError: len(x) differs from the matrix column count
        """
        cfg = cfg or PipelineConfig()
        packed = PipelineService.load_packed(path, cfg)
        x = np.ones(packed.n_cols) if x is None else SpMVKernels.check_vector(x, packed.n_cols)
        y, mean_seconds = ReportService.time_spmv(packed, x, cfg, iters)
        IOUtils.print(f"{iters} iterations, mean {mean_seconds:.6f} s")
        if output is not None:
            VectorFileGenerator.write(y, output)
            IOUtils.print(f"Wrote {output}")
        timing = SpMVTiming(matrix=str(path), mode=cfg.mode, iters=iters, nnz=packed.nnz,
                            mean_seconds=mean_seconds, gflops=ReportService.gflops(packed.nnz, mean_seconds),
                            output=None if output is None else str(output))
        return y, timing

    @staticmethod
    def bench(path: PathLike, cfg: Optional[PipelineConfig] = None, iters: int = 10,
              csv_path: Optional[PathLike] = None) -> BenchReport:
        """Run every aggregation/balance variant on one matrix and tabulate the timings."""
        cfg = cfg or PipelineConfig()
        IOUtils.show_title("Bench")
        m = PipelineService.load_matrix(path)
        x = np.ones(m.n_cols)
        rows = []
        for name, toggles in BENCH_VARIANTS.items():
            variant_cfg = cfg.model_copy(update=toggles)
            packed, summary = PipelineService.build(m, variant_cfg)
            _, mean_seconds = ReportService.time_spmv(packed, x, variant_cfg, iters)
            schedule = packed.schedule or LoadBalancer.naive_schedule(packed, cfg.warps_per_tb)
            rows.append(BenchRow(
                variant=name,
                aggregation_applied=summary.aggregation_applied,
                balanced=summary.balanced,
                preprocess_seconds=summary.preprocess_seconds,
                mean_seconds=mean_seconds,
                gflops=ReportService.gflops(m.nnz, mean_seconds),
                load_stddev=LoadBalancer.load_stats(schedule).stddev,
            ))
            IOUtils.print(f"{name:>12}: {rows[-1].gflops:.4f} Gflops")
        report = BenchReport(matrix=str(path), nnz=m.nnz, iters=iters, rows=rows)
        if csv_path is not None:
            pd.DataFrame([row.model_dump() for row in rows]).to_csv(csv_path, index=False)
            IOUtils.print(f"Wrote {csv_path}")
        return report
