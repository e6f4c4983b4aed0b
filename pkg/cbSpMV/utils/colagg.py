import numpy as np

from cbSpMV.models.matrix import BlockedCoo
from cbSpMV.models.packed import ColumnAggregationMap
from cbSpMV.models.reports import BlockStats
from cbSpMV.models.settings import TH0_SUPER_SPARSE_FRACTION
from cbSpMV.utils.blocking import BLK_SIZE, BlockingUtils


class ColumnAggregation:
    @staticmethod
    def should_aggregate(stats: BlockStats, th0: float = TH0_SUPER_SPARSE_FRACTION) -> bool:
        # inclusive boundary: a fraction of exactly th0 aggregates
        return stats.super_sparse_fraction >= th0

    @staticmethod
    def aggregate_columns(b: BlockedCoo) -> tuple[BlockedCoo, ColumnAggregationMap]:
        """
        Drop all-zero columns block row by block row and shift the rest leftward.

        In block row i every original column c holding a non-zero is replaced by its
        rank among those columns; blocks are then re-formed on the compacted columns.
        Segment i of restore_cols lists the original columns in rank order.
        """
        rows, cols = BlockingUtils.global_coordinates(b)
        blk_rows = rows // BLK_SIZE
        width = max(b.n_cols, 1)
        keys = blk_rows * width + cols
        unique_keys = np.unique(keys)
        counts = np.bincount(unique_keys // width, minlength=b.blk_m)
        cols_offset = np.zeros(b.blk_m + 1, dtype=np.int64)
        np.cumsum(counts, out=cols_offset[1:])
        aggregated_cols = np.searchsorted(unique_keys, keys) - cols_offset[blk_rows]
        aggregated = BlockingUtils.partition_arrays(b.n_rows, b.n_cols, rows, aggregated_cols, b.vals)
        agg_map = ColumnAggregationMap(cols_offset=cols_offset, restore_cols=unique_keys % width)
        return aggregated, agg_map

    @staticmethod
    def restore_column(agg_map: ColumnAggregationMap, blk_row: int, aggregated_col: int) -> int:
        length = agg_map.segment_length(blk_row)
        if not 0 <= aggregated_col < length:
            raise IndexError(f"aggregated column {aggregated_col} outside block row {blk_row} (width {length})")
        return int(agg_map.restore_cols[agg_map.cols_offset[blk_row] + aggregated_col])

    @staticmethod
    def restore_columns(agg_map: ColumnAggregationMap, blk_rows: np.ndarray, aggregated_cols: np.ndarray) -> np.ndarray:
        """Vectorised restore_column; out-of-segment columns map to -1."""
        blk_rows = np.asarray(blk_rows, dtype=np.int64)
        aggregated_cols = np.asarray(aggregated_cols, dtype=np.int64)
        lengths = np.diff(agg_map.cols_offset)[blk_rows]
        valid = aggregated_cols < lengths
        index = np.where(valid, agg_map.cols_offset[blk_rows] + aggregated_cols, 0)
        if len(agg_map.restore_cols) == 0:
            return np.full(aggregated_cols.shape, -1, dtype=np.int64)
        return np.where(valid, agg_map.restore_cols[index], -1)
