"""
-------------------------------------------------------------------------------
  *****   ******            *****   ******   *     *  *     *
 *     *  *     *          *     *  *     *  **   **  *     *
 *        *     *          *        *     *  * * * *  *     *
 *        ******   *****    *****   ******   *  *  *  *     *
 *        *     *                *  *        *     *   *   *
 *     *  *     *          *     *  *        *     *    * *
  *****   ******            *****   *        *     *     *
-------------------------------------------------------------------------------
 * cbspmv is a cache-friendly block sparse matrix-vector multiplication toolkit.
 *
 * This software is licensed under the GNU General Public License version 3 (GPL-3.0).
 * You may obtain a copy of the license at https://www.gnu.org/licenses/gpl-3.0.en.html
 */
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from cbSpMV.models.errors import DimensionMismatchError, PackingError
from cbSpMV.models.matrix import BLK_SIZE, TripletMatrix
from cbSpMV.models.packed import VALUE_ALIGN, WARPS_PER_TB, BlockFormat, PackedMatrix, align_up, region_sizes
from cbSpMV.models.settings import ExecMode
from cbSpMV.utils.colagg import ColumnAggregation

ROW_PTR_LEN = BLK_SIZE + 1
HALF_WARP_COLS = BLK_SIZE // 2
DENSE_VALUES = BLK_SIZE * BLK_SIZE
# orders contributions by (block position, element or local row)
POSITION_STRIDE = DENSE_VALUES

Contributions = tuple[np.ndarray, np.ndarray, np.ndarray]


def _segments(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Owner segment and offset within it for every element of a ragged array."""
    owner = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    return owner, np.arange(len(owner)) - starts[owner]


def _empty_contributions() -> Contributions:
    return np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0, dtype=np.int64)


class SpMVKernels:
    @staticmethod
    def check_vector(x, length: int, what: str = "x") -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or len(x) != length:
            raise DimensionMismatchError(f"{what} has length {x.size}, the matrix needs {length}")
        if not np.all(np.isfinite(x)):
            raise ValueError(f"{what} contains non-finite values")
        return x

    @staticmethod
    def spmv_reference_csr(m: TripletMatrix, x) -> np.ndarray:
        """Row-by-row CSR product, each row accumulated in column-ascending order."""
        x = SpMVKernels.check_vector(x, m.n_cols)
        row_ptr, col_idx, val = m.to_csr()
        rows = np.repeat(np.arange(m.n_rows), np.diff(row_ptr))
        return np.bincount(rows, weights=val * x[col_idx], minlength=m.n_rows).astype(np.float64)

    @staticmethod
    def check_regions(p: PackedMatrix):
        tags = p.type_per_blk
        known = tags <= max(BlockFormat)
        if not np.all(known):
            i = int(np.argmin(known))
            raise PackingError(f"block {i} carries corrupt format tag {int(tags[i])}")
        outside = (p.blk_row_idx >= p.blk_m) | (p.blk_col_idx >= p.blk_n)
        if np.any(outside):
            i = int(np.argmax(outside))
            raise PackingError(f"block {i} at ({int(p.blk_row_idx[i])}, {int(p.blk_col_idx[i])}) "
                               f"lies outside the {p.blk_m}x{p.blk_n} block grid")
        vp = p.vp_per_blk
        # checked unsigned before the int64 cast
        bad = ((vp % VALUE_ALIGN != 0) | (vp > len(p.mtx_data))
               | (vp.astype(np.int64) + region_sizes(tags, p.nnz_per_blk) > len(p.mtx_data)))
        if np.any(bad):
            i = int(np.argmax(bad))
            raise PackingError(f"block {i} has virtual pointer {int(vp[i])} outside mtx_data ({len(p.mtx_data)} bytes)")

    @staticmethod
    def _columns(p: PackedMatrix, blk_rows: np.ndarray, stored_cols: np.ndarray) -> np.ndarray:
        if p.agg is not None:
            cols = ColumnAggregation.restore_columns(p.agg, blk_rows, stored_cols)
            if len(cols) and cols.min() < 0:
                raise PackingError("block references a column outside its aggregation segment")
            return cols
        if len(stored_cols) and stored_cols.max() >= p.n_cols:
            raise PackingError("block references a column outside the matrix")
        return stored_cols

    @staticmethod
    def _coo(p: PackedMatrix, data, fdata, x, blocks, positions) -> Contributions:
        # one lane per element, emulating atomic adds into y
        nnz = p.nnz_per_blk[blocks].astype(np.int64)
        vp = p.vp_per_blk[blocks].astype(np.int64)
        owner, k = _segments(nnz)
        codes = data[vp[owner] + k].astype(np.int64)
        vals = fdata[(vp[owner] + align_up(nnz[owner])) // VALUE_ALIGN + k]
        blk_rows = p.blk_row_idx[blocks].astype(np.int64)[owner]
        blk_cols = p.blk_col_idx[blocks].astype(np.int64)[owner]
        cols = SpMVKernels._columns(p, blk_rows, blk_cols * BLK_SIZE + (codes >> 4))
        rows = blk_rows * BLK_SIZE + (codes & 15)
        return rows, vals * x[cols], positions[owner] * POSITION_STRIDE + k

    @staticmethod
    def _csr(p: PackedMatrix, data, fdata, x, blocks, positions) -> Contributions:
        # one partial sum per non-empty local row
        nnz = p.nnz_per_blk[blocks].astype(np.int64)
        vp = p.vp_per_blk[blocks].astype(np.int64)
        row_ptr = data[vp[:, None] + np.arange(ROW_PTR_LEN)].astype(np.int64)
        counts = np.diff(row_ptr, axis=1)
        if np.any(row_ptr[:, 0] != 0) or np.any(row_ptr[:, -1] != nnz) or np.any(counts < 0):
            raise PackingError("CSR block has a corrupt row pointer")
        owner, k = _segments(nnz)
        local_rows = np.repeat(np.tile(np.arange(BLK_SIZE), len(blocks)), counts.ravel())
        blk_rows = p.blk_row_idx[blocks].astype(np.int64)
        blk_cols = p.blk_col_idx[blocks].astype(np.int64)
        col_bytes = data[vp[owner] + ROW_PTR_LEN + k].astype(np.int64)
        vals = fdata[(vp[owner] + align_up(ROW_PTR_LEN + nnz[owner])) // VALUE_ALIGN + k]
        cols = SpMVKernels._columns(p, blk_rows[owner], blk_cols[owner] * BLK_SIZE + col_bytes)
        sums = np.bincount(owner * BLK_SIZE + local_rows, weights=vals * x[cols], minlength=len(blocks) * BLK_SIZE)
        present = np.flatnonzero(counts.ravel() > 0)
        seg_owner, seg_row = np.divmod(present, BLK_SIZE)
        rows = blk_rows[seg_owner] * BLK_SIZE + seg_row
        return rows, sums[present], positions[seg_owner] * POSITION_STRIDE + seg_row

    @staticmethod
    def _dense(p: PackedMatrix, data, fdata, x, blocks, positions) -> Contributions:
        # each row is two 8-column half dot products combined
        vp = p.vp_per_blk[blocks].astype(np.int64)
        tiles = fdata[(vp // VALUE_ALIGN)[:, None] + np.arange(DENSE_VALUES)].reshape(-1, BLK_SIZE, BLK_SIZE)
        blk_rows = p.blk_row_idx[blocks].astype(np.int64)
        stored_cols = p.blk_col_idx[blocks].astype(np.int64)[:, None] * BLK_SIZE + np.arange(BLK_SIZE)
        if p.agg is not None:
            cols = ColumnAggregation.restore_columns(
                p.agg, np.repeat(blk_rows, BLK_SIZE), stored_cols.ravel()).reshape(-1, BLK_SIZE)
        else:
            cols = np.where(stored_cols < p.n_cols, stored_cols, -1)
        valid = cols >= 0
        if np.any(tiles[np.broadcast_to(~valid[:, None, :], tiles.shape)] != 0.0):
            raise PackingError("DENSE block stores a value outside the matrix columns")
        xs = np.where(valid, x[np.where(valid, cols, 0)], 0.0)
        row_sums = ((tiles[:, :, :HALF_WARP_COLS] * xs[:, None, :HALF_WARP_COLS]).sum(axis=2)
                    + (tiles[:, :, HALF_WARP_COLS:] * xs[:, None, HALF_WARP_COLS:]).sum(axis=2))
        rows = blk_rows[:, None] * BLK_SIZE + np.arange(BLK_SIZE)
        order = positions[:, None] * POSITION_STRIDE + np.arange(BLK_SIZE)
        return rows.ravel(), row_sums.ravel(), order.ravel()

    @staticmethod
    def contributions(p: PackedMatrix, x: np.ndarray, blocks: np.ndarray) -> Contributions:
        """
        Row updates produced by the given stored blocks.

        Returns:
            tuple: (target row, value to add, ordering key); the key sorts updates by
                the block's position in `blocks`, then by element or local row
        """
        if len(blocks) == 0:
            return _empty_contributions()
        data = np.frombuffer(p.mtx_data, dtype=np.uint8)
        fdata = np.frombuffer(p.mtx_data, dtype="<f8", count=len(p.mtx_data) // VALUE_ALIGN)
        tags = p.type_per_blk[blocks]
        positions = np.arange(len(blocks), dtype=np.int64)
        parts = []
        for fmt, kernel in ((BlockFormat.COO, SpMVKernels._coo),
                            (BlockFormat.CSR, SpMVKernels._csr),
                            (BlockFormat.DENSE, SpMVKernels._dense)):
            mask = tags == fmt
            if np.any(mask):
                parts.append(kernel(p, data, fdata, x, blocks[mask], positions[mask]))
        rows, vals, keys = (np.concatenate(column) for column in zip(*parts))
        return rows, vals, keys

    @staticmethod
    def thread_block_of(p: PackedMatrix, warps_per_tb: int = WARPS_PER_TB) -> np.ndarray:
        if p.schedule is not None:
            return p.schedule.tb_of_block
        return np.arange(p.block_count, dtype=np.int64) // warps_per_tb

    @staticmethod
    def _thread_block_partials(p: PackedMatrix, x: np.ndarray, blocks: np.ndarray,
                               tb_of_block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Private partial y of every thread block in `blocks`, as (row, value) pairs sorted by (tb, row)."""
        rows, vals, keys = SpMVKernels.contributions(p, x, blocks)
        tbs = tb_of_block[blocks][keys // POSITION_STRIDE]
        order = np.lexsort((keys, tbs))
        rows_ext = p.blk_m * BLK_SIZE
        pair_keys, inverse = np.unique(tbs[order] * rows_ext + rows[order], return_inverse=True)
        partials = np.bincount(inverse.ravel(), weights=vals[order], minlength=len(pair_keys))
        return pair_keys % rows_ext, partials

    @staticmethod
    def spmv_cb(p: PackedMatrix, x, mode: ExecMode = "sequential", threads: int = 0,
                warps_per_tb: int = WARPS_PER_TB) -> np.ndarray:
        """
        Multiply a packed matrix by x.

        sequential processes blocks in stored order with in-order accumulation.
        parallel_tb runs thread blocks concurrently, each summing into a private
        partial y; partials are merged in ascending thread-block order. Thread blocks
        follow p.schedule when present, else consecutive groups of warps_per_tb blocks.

        Raises:
            DimensionMismatchError: len(x) != p.n_cols
            PackingError: unknown format tag or virtual pointer out of bounds
        """
        x = SpMVKernels.check_vector(x, p.n_cols)
        if p.block_count == 0:
            return np.zeros(p.n_rows)
        SpMVKernels.check_regions(p)
        rows_ext = p.blk_m * BLK_SIZE
        if mode == "sequential":
            rows, vals, keys = SpMVKernels.contributions(p, x, np.arange(p.block_count))
            order = np.argsort(keys, kind="stable")
            y = np.bincount(rows[order], weights=vals[order], minlength=rows_ext)
            return y[:p.n_rows]
        if mode != "parallel_tb":
            raise ValueError(f"unknown execution mode '{mode}'")

        tb_of_block = SpMVKernels.thread_block_of(p, warps_per_tb)
        by_tb = np.lexsort((np.arange(p.block_count), tb_of_block))
        sorted_tbs = tb_of_block[by_tb]
        tb_ids = np.unique(sorted_tbs)
        workers = max(1, min(threads or os.cpu_count() or 1, len(tb_ids)))
        # contiguous runs of thread blocks per worker
        bounds = np.searchsorted(sorted_tbs, [chunk[0] for chunk in np.array_split(tb_ids, workers)])
        chunks = np.split(by_tb, bounds[1:])
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda blocks: SpMVKernels._thread_block_partials(p, x, np.sort(blocks), tb_of_block), chunks))
        rows = np.concatenate([r for r, _ in results])
        partials = np.concatenate([v for _, v in results])
        return np.bincount(rows, weights=partials, minlength=rows_ext)[:p.n_rows]

    @staticmethod
    def spmv_cb_scheduled(p: PackedMatrix, x, mode: ExecMode = "parallel_tb", threads: int = 0) -> np.ndarray:
        if p.schedule is None:
            raise ValueError("matrix has no thread-block schedule, run the balancer first")
        return SpMVKernels.spmv_cb(p, x, mode, threads, p.schedule.warps_per_tb)
