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

import numpy as np

from cbSpMV.models.errors import DegenerateMatrixError
from cbSpMV.models.matrix import BLK_SIZE, BlockedCoo, TripletMatrix
from cbSpMV.models.reports import BlockStats

SUPER_SPARSE_BELOW = 32
HISTOGRAM_WIDTH = 32
SUB_HISTOGRAM_WIDTH = 8


class BlockingUtils:
    @staticmethod
    def partition_arrays(n_rows: int, n_cols: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> BlockedCoo:
        blk_n = -(-n_cols // BLK_SIZE)
        blk_rows, local_rows = np.divmod(rows, BLK_SIZE)
        blk_cols, local_cols = np.divmod(cols, BLK_SIZE)
        keys = blk_rows * blk_n + blk_cols
        order = np.lexsort((local_cols, local_rows, keys))
        keys = keys[order]
        unique_keys, first = np.unique(keys, return_index=True)
        blk_ptr = np.append(first, len(keys))
        return BlockedCoo(
            n_rows=n_rows,
            n_cols=n_cols,
            blk_row_idx=unique_keys // max(blk_n, 1),
            blk_col_idx=unique_keys % max(blk_n, 1),
            blk_ptr=blk_ptr,
            local_row=local_rows[order],
            local_col=local_cols[order],
            vals=vals[order],
        )

    @staticmethod
    def partition(m: TripletMatrix) -> BlockedCoo:
        """
        Split a canonical matrix into uniform 16x16 sub-blocks.

        Entry (r, c, v) lands in block (r // 16, c // 16) at local (r % 16, c % 16).
        All-zero blocks are never materialised.
        """
        return BlockingUtils.partition_arrays(m.n_rows, m.n_cols, m.rows, m.cols, m.vals)

    @staticmethod
    def global_coordinates(b: BlockedCoo) -> tuple[np.ndarray, np.ndarray]:
        owner = np.repeat(np.arange(b.block_count), b.nnz_per_block)
        rows = b.blk_row_idx[owner] * BLK_SIZE + b.local_row
        cols = b.blk_col_idx[owner] * BLK_SIZE + b.local_col
        return rows, cols

    @staticmethod
    def unpartition(b: BlockedCoo) -> TripletMatrix:
        rows, cols = BlockingUtils.global_coordinates(b)
        order = np.lexsort((cols, rows))
        return TripletMatrix(n_rows=b.n_rows, n_cols=b.n_cols,
                             rows=rows[order], cols=cols[order], vals=b.vals[order])

    @staticmethod
    def compute_block_stats(b: BlockedCoo) -> BlockStats:
        if b.block_count == 0:
            raise DegenerateMatrixError("block statistics need at least one non-zero block")
        nnz = b.nnz_per_block
        histogram8 = np.bincount((nnz - 1) // HISTOGRAM_WIDTH, minlength=8)
        first_category = nnz[nnz <= HISTOGRAM_WIDTH]
        histogram_sub4 = np.bincount((first_category - 1) // SUB_HISTOGRAM_WIDTH, minlength=4)
        return BlockStats(
            total_blocks=b.block_count,
            histogram8=histogram8.tolist(),
            histogram_sub4=histogram_sub4.tolist(),
            super_sparse_fraction=float(np.count_nonzero(nnz < SUPER_SPARSE_BELOW)) / b.block_count,
        )
