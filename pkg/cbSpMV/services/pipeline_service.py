import os
import time
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from cbSpMV.generators.cbsmContainer import CbsmContainerGenerator
from cbSpMV.models.matrix import TripletMatrix
from cbSpMV.models.packed import PackedMatrix
from cbSpMV.models.reports import PipelineSummary
from cbSpMV.models.settings import PipelineConfig
from cbSpMV.utils.balance import LoadBalancer
from cbSpMV.utils.blocking import BlockingUtils
from cbSpMV.utils.colagg import ColumnAggregation
from cbSpMV.utils.container import ContainerIO
from cbSpMV.utils.io import IOUtils, PathLike
from cbSpMV.utils.matrix_market import MatrixMarketIO
from cbSpMV.utils.packing import PackUtils

THREADS_ENV = "CBSPMV_THREADS"
CONTAINER_SUFFIX = ".cbsm"


class PipelineService:
    @staticmethod
    def load_config(config_path: PathLike) -> PipelineConfig:
        IOUtils.print(f"Loading pipeline config from {config_path}")
        with Path(config_path).open() as f:
            data = yaml.safe_load(f) or {}
        return PipelineConfig.model_validate(data)

    @staticmethod
    def resolve_config(config_path: Optional[PathLike] = None, overrides: Optional[Mapping[str, Any]] = None,
                       environ: Optional[Mapping[str, str]] = None) -> PipelineConfig:
        """
        Build the effective configuration.

        Later sources win: defaults, the YAML file, CBSPMV_THREADS, then explicit overrides
        (None values in overrides are ignored).
        """
        environ = os.environ if environ is None else environ
        data: dict[str, Any] = {}
        if config_path is not None:
            data.update(PipelineService.load_config(config_path).model_dump(exclude_unset=True))
        if environ.get(THREADS_ENV):
            data["threads"] = environ[THREADS_ENV]
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return PipelineConfig.model_validate(data)

    @staticmethod
    def load_matrix(path: PathLike) -> TripletMatrix:
        """Read a matrix from a Matrix Market file, or rebuild it from a CBSM container."""
        if Path(path).suffix == CONTAINER_SUFFIX:
            return PackUtils.to_triplet(ContainerIO.read(path))
        return MatrixMarketIO.read(path)

    @staticmethod
    def build(m: TripletMatrix, cfg: Optional[PipelineConfig] = None) -> tuple[PackedMatrix, PipelineSummary]:
        """
        Run the preprocessing pipeline: blocking, optional column aggregation,
        per-block format selection and packing, then optional load balancing.
        """
        cfg = cfg or PipelineConfig()
        start = time.perf_counter()
        blocked = BlockingUtils.partition(m)
        IOUtils.print(f"Partitioned {m.n_rows}x{m.n_cols} matrix ({m.nnz} nnz) into {blocked.block_count} blocks")

        stats = BlockingUtils.compute_block_stats(blocked) if blocked.block_count else None
        fraction = stats.super_sparse_fraction if stats else 0.0
        if cfg.enable_agg == "auto":
            apply_agg = stats is not None and ColumnAggregation.should_aggregate(stats, cfg.th0)
        else:
            apply_agg = cfg.enable_agg == "on"
        IOUtils.print(f"Super-sparse block fraction {fraction:.4f}, aggregation {'applied' if apply_agg else 'skipped'}")

        agg_map = None
        if apply_agg:
            blocked, agg_map = ColumnAggregation.aggregate_columns(blocked)
            IOUtils.print(f"Aggregated columns into {blocked.block_count} blocks")

        packed = PackUtils.pack_matrix(blocked, agg_map, cfg.th1, cfg.th2)
        histogram = packed.format_histogram()
        IOUtils.print(f"Block formats: {histogram}, {len(packed.mtx_data)} payload bytes")

        balanced = cfg.enable_balance and packed.block_count > 0
        if balanced:
            packed = LoadBalancer.balance(packed, cfg.warps_per_tb)
            loads = LoadBalancer.load_stats(packed.schedule)
            IOUtils.print(f"Thread-block loads: mean {loads.mean:.1f}, stddev {loads.stddev:.1f}, max {loads.max}")

        elapsed = time.perf_counter() - start
        IOUtils.print(f"Preprocessing took {elapsed:.4f} s")
        summary = PipelineSummary(
            n_rows=m.n_rows,
            n_cols=m.n_cols,
            nnz=m.nnz,
            block_count=packed.block_count,
            super_sparse_fraction=fraction,
            aggregation_applied=apply_agg,
            balanced=balanced,
            format_histogram=histogram,
            preprocess_seconds=elapsed,
        )
        return packed, summary

    @staticmethod
    def load_packed(path: PathLike, cfg: Optional[PipelineConfig] = None) -> PackedMatrix:
        """Read a CBSM container, or run the pipeline on a Matrix Market file."""
        if Path(path).suffix == CONTAINER_SUFFIX:
            return ContainerIO.read(path)
        packed, _ = PipelineService.build(MatrixMarketIO.read(path), cfg)
        return packed

    @staticmethod
    def convert(input_path: PathLike, output_path: PathLike, cfg: Optional[PipelineConfig] = None) -> PipelineSummary:
        IOUtils.show_title("Convert")
        packed, summary = PipelineService.build(MatrixMarketIO.read(input_path), cfg)
        output_path = Path(output_path)
        try:
            CbsmContainerGenerator.write(packed, output_path)
        except OSError as e:
            raise OSError(f"Failed to write container {output_path}: {e}")
        IOUtils.print(f"Wrote {output_path}")
        return summary
