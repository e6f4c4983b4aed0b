from typing import Literal, Optional

from pydantic import BaseModel, Field, computed_field, model_validator

TraceFormat = Literal["csr", "cb"]


class BlockStats(BaseModel):
    total_blocks: int
    histogram8: list[int] = Field(min_length=8, max_length=8)
    histogram_sub4: list[int] = Field(min_length=4, max_length=4)
    super_sparse_fraction: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_histograms(self):
        if sum(self.histogram8) != self.total_blocks:
            raise ValueError("histogram8 must sum to total_blocks")
        if sum(self.histogram_sub4) != self.histogram8[0]:
            raise ValueError("histogram_sub4 must sum to the first histogram8 category")
        return self


class LoadStats(BaseModel):
    mean: float
    stddev: float
    max: int
    min: int


class StorageReport(BaseModel):
    m: int
    n: int
    nnz: int
    nnzb: int
    blk_m: int
    csr_bytes: int
    bsr_bytes: int
    cb_bytes: int
    measured_cb_bytes: Optional[int] = None


class CacheResult(BaseModel):
    format: TraceFormat
    config: str
    accesses: int
    hits: int

    @computed_field
    @property
    def hit_rate(self) -> float:
        return self.hits / self.accesses

    @model_validator(mode="after")
    def _check_counts(self):
        if self.accesses < 1 or not 0 <= self.hits <= self.accesses:
            raise ValueError("hits must lie between 0 and a positive access count")
        return self


class CacheSimReport(BaseModel):
    matrix: str
    config: str
    csr: CacheResult
    cb: CacheResult

    @staticmethod
    def from_results(matrix: str, csr: CacheResult, cb: CacheResult) -> "CacheSimReport":
        return CacheSimReport(matrix=matrix, config=csr.config, csr=csr, cb=cb)


class PipelineSummary(BaseModel):
    n_rows: int
    n_cols: int
    nnz: int
    block_count: int
    super_sparse_fraction: float
    aggregation_applied: bool
    balanced: bool
    format_histogram: dict[str, int]
    preprocess_seconds: float


class StatsReport(BaseModel):
    matrix: str
    block_stats: BlockStats
    should_aggregate: bool
    storage: StorageReport


class BalanceReport(BaseModel):
    matrix: str
    warps_per_tb: int
    tb_count: int
    pre_loads: list[int]
    post_loads: list[int]
    pre: LoadStats
    post: LoadStats


class SpMVTiming(BaseModel):
    matrix: str
    mode: str
    iters: int
    nnz: int
    mean_seconds: float
    gflops: float
    output: Optional[str] = None


class VerifyReport(BaseModel):
    matrix: str
    variant: str
    vectors: int
    max_relative_error: float
    tolerance: float
    passed: bool


class BenchRow(BaseModel):
    variant: str
    aggregation_applied: bool
    balanced: bool
    preprocess_seconds: float
    mean_seconds: float
    gflops: float
    load_stddev: float


class BenchReport(BaseModel):
    matrix: str
    nnz: int
    iters: int
    rows: list[BenchRow]
