from enum import IntEnum
from typing import Literal, Optional

import numpy as np
from pydantic import field_validator, model_validator

from cbSpMV.models.matrix import BLK_SIZE, ArrayModel, as_array

VALUE_ALIGN = 8
WARPS_PER_TB = 8


class BlockFormat(IntEnum):
    COO = 0
    CSR = 1
    DENSE = 2


class ColumnAggregationMap(ArrayModel):
    """restore_cols[cols_offset[i]:cols_offset[i+1]] lists the original columns kept in block row i."""
    cols_offset: np.ndarray
    restore_cols: np.ndarray

    @field_validator("cols_offset", mode="before")
    @classmethod
    def _offset_array(cls, value):
        return as_array(value, np.int64)

    @field_validator("restore_cols", mode="before")
    @classmethod
    def _restore_array(cls, value):
        return as_array(value, np.int64)

    @model_validator(mode="after")
    def _check_segments(self):
        if len(self.cols_offset) == 0 or self.cols_offset[0] != 0:
            raise ValueError("cols_offset must start at 0")
        if np.any(np.diff(self.cols_offset) < 0):
            raise ValueError("cols_offset must be non-decreasing")
        if self.cols_offset[-1] != len(self.restore_cols):
            raise ValueError("cols_offset must end at len(restore_cols)")
        lengths = np.diff(self.cols_offset)
        starts_segment = np.zeros(len(self.restore_cols), dtype=bool)
        starts_segment[self.cols_offset[:-1][lengths > 0]] = True
        steps = np.diff(self.restore_cols)
        if np.any((steps <= 0) & ~starts_segment[1:]):
            raise ValueError("restore_cols must be strictly increasing within each block row")
        return self

    @property
    def blk_m(self) -> int:
        return len(self.cols_offset) - 1

    def segment(self, blk_row: int) -> np.ndarray:
        return self.restore_cols[self.cols_offset[blk_row]:self.cols_offset[blk_row + 1]]

    def segment_length(self, blk_row: int) -> int:
        return int(self.cols_offset[blk_row + 1] - self.cols_offset[blk_row])


class ThreadBlockSchedule(ArrayModel):
    """
    Assignment of stored blocks to thread-block warp slots.

    slot_of_block[i] = tb_id * warps_per_tb + warp_slot for the block stored at
    position i; load_per_tb[t] is the nnz handled by thread block t.
    """
    warps_per_tb: int = WARPS_PER_TB
    tb_count: int
    slot_of_block: np.ndarray
    load_per_tb: np.ndarray

    @field_validator("slot_of_block", "load_per_tb", mode="before")
    @classmethod
    def _int_array(cls, value):
        return as_array(value, np.int64)

    @model_validator(mode="after")
    def _check_capacity(self):
        if self.warps_per_tb < 1:
            raise ValueError("warps_per_tb must be at least 1")
        if len(self.load_per_tb) != self.tb_count:
            raise ValueError("load_per_tb must have one entry per thread block")
        if len(self.slot_of_block):
            if len(np.unique(self.slot_of_block)) != len(self.slot_of_block):
                raise ValueError("two blocks share a warp slot")
            if self.slot_of_block.min() < 0 or self.slot_of_block.max() >= self.tb_count * self.warps_per_tb:
                raise ValueError("warp slot out of range")
        return self

    @property
    def tb_of_block(self) -> np.ndarray:
        return self.slot_of_block // self.warps_per_tb

    def compacted_slots(self) -> np.ndarray:
        """Rank of each block's slot among all used slots."""
        return np.argsort(np.argsort(self.slot_of_block, kind="stable"), kind="stable")


class PackedMatrix(ArrayModel):
    n_rows: int
    n_cols: int
    blk_row_idx: np.ndarray
    blk_col_idx: np.ndarray
    nnz_per_blk: np.ndarray
    type_per_blk: np.ndarray
    vp_per_blk: np.ndarray
    mtx_data: bytes
    agg: Optional[ColumnAggregationMap] = None
    schedule: Optional[ThreadBlockSchedule] = None

    @field_validator("blk_row_idx", "blk_col_idx", "nnz_per_blk", mode="before")
    @classmethod
    def _u32_array(cls, value):
        return as_array(value, np.uint32)

    @field_validator("type_per_blk", mode="before")
    @classmethod
    def _type_array(cls, value):
        return as_array(value, np.uint8)

    @field_validator("vp_per_blk", mode="before")
    @classmethod
    def _vp_array(cls, value):
        return as_array(value, np.uint64)

    @model_validator(mode="after")
    def _check_layout(self):
        n_blocks = len(self.blk_row_idx)
        if not all(len(a) == n_blocks for a in (self.blk_col_idx, self.nnz_per_blk, self.type_per_blk, self.vp_per_blk)):
            raise ValueError("the five per-block arrays must have equal length")
        if n_blocks == 0:
            return self
        if np.any(self.vp_per_blk % VALUE_ALIGN):
            raise ValueError("every virtual pointer must be 8-byte aligned")
        if self.type_per_blk.max() > max(BlockFormat):
            raise ValueError("unknown block format tag")
        if self.blk_row_idx.max() >= self.blk_m or self.blk_col_idx.max() >= self.blk_n:
            raise ValueError(f"block index outside the {self.blk_m}x{self.blk_n} block grid")
        # bound the unsigned offsets before the signed cast below
        if self.vp_per_blk.max() > len(self.mtx_data):
            raise ValueError("block payload regions overlap or exceed mtx_data")
        sizes = region_sizes(self.type_per_blk, self.nnz_per_blk)
        order = np.argsort(self.vp_per_blk, kind="stable")
        starts = self.vp_per_blk[order].astype(np.int64)
        ends = starts + sizes[order]
        if np.any(starts[1:] < ends[:-1]) or ends[-1] > len(self.mtx_data):
            raise ValueError("block payload regions overlap or exceed mtx_data")
        if self.agg is not None and self.agg.blk_m != self.blk_m:
            raise ValueError("aggregation map does not match the block-row count")
        if self.schedule is not None and len(self.schedule.slot_of_block) != n_blocks:
            raise ValueError("schedule does not cover every block")
        return self

    @property
    def blk_m(self) -> int:
        return -(-self.n_rows // BLK_SIZE)

    @property
    def blk_n(self) -> int:
        return -(-self.n_cols // BLK_SIZE)

    @property
    def block_count(self) -> int:
        return len(self.blk_row_idx)

    @property
    def nnz(self) -> int:
        return int(self.nnz_per_blk.sum(dtype=np.int64))

    def format_histogram(self) -> dict[Literal["COO", "CSR", "DENSE"], int]:
        counts = np.bincount(self.type_per_blk, minlength=len(BlockFormat))
        return {fmt.name: int(counts[fmt]) for fmt in BlockFormat}  # type: ignore[misc]


def align_up(value, align: int = VALUE_ALIGN):
    return -(-value // align) * align


def region_sizes(formats: np.ndarray, nnz: np.ndarray) -> np.ndarray:
    """Byte size of each packed block region, tail padding included."""
    formats = np.asarray(formats)
    nnz = np.asarray(nnz, dtype=np.int64)
    value_bytes = nnz * 8
    sizes = np.where(formats == BlockFormat.COO, align_up(nnz) + value_bytes,
                     np.where(formats == BlockFormat.CSR, align_up(BLK_SIZE + 1 + nnz) + value_bytes,
                              BLK_SIZE * BLK_SIZE * 8))
    return align_up(sizes).astype(np.int64)
