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

from typing import Optional

import numpy as np

from cbSpMV.models.errors import PackingError
from cbSpMV.models.matrix import BLK_SIZE, Block, BlockedCoo, TripletMatrix
from cbSpMV.models.packed import VALUE_ALIGN, BlockFormat, ColumnAggregationMap, PackedMatrix, align_up, region_sizes
from cbSpMV.models.settings import TH1_COO_BELOW, TH2_DENSE_ABOVE
from cbSpMV.utils.colagg import ColumnAggregation

IDX_BYTES = 1
VAL_BYTES = 8
ROW_PTR_LEN = BLK_SIZE + 1
# row_ptr entries are 8-bit, so row_ptr[16] = nnz caps a CSR block at 255 elements
CSR_MAX_NNZ = 255
DENSE_VALUES = BLK_SIZE * BLK_SIZE
VALUE_DTYPE = np.dtype("<f8")


class PackUtils:
    @staticmethod
    def select_format(nnz: int, th1: int = TH1_COO_BELOW, th2: int = TH2_DENSE_ABOVE) -> BlockFormat:
        if not 1 <= nnz <= DENSE_VALUES:
            raise PackingError(f"block nnz {nnz} outside 1..{DENSE_VALUES}")
        if nnz < th1:
            return BlockFormat.COO
        if nnz > th2 or nnz > CSR_MAX_NNZ:
            return BlockFormat.DENSE
        return BlockFormat.CSR

    @staticmethod
    def select_formats(nnz: np.ndarray, th1: int = TH1_COO_BELOW, th2: int = TH2_DENSE_ABOVE) -> np.ndarray:
        nnz = np.asarray(nnz)
        if len(nnz) and (nnz.min() < 1 or nnz.max() > DENSE_VALUES):
            raise PackingError(f"block nnz outside 1..{DENSE_VALUES}")
        formats = np.full(len(nnz), BlockFormat.CSR, dtype=np.uint8)
        formats[(nnz > th2) | (nnz > CSR_MAX_NNZ)] = BlockFormat.DENSE
        formats[nnz < th1] = BlockFormat.COO
        return formats

    @staticmethod
    def encode_coord(local_row: int, local_col: int) -> int:
        if not (0 <= local_row < BLK_SIZE and 0 <= local_col < BLK_SIZE):
            raise ValueError(f"local coordinate ({local_row}, {local_col}) outside 0..15")
        return (local_col << 4) | local_row

    @staticmethod
    def decode_coord(code: int) -> tuple[int, int]:
        return code & 15, code >> 4

    @staticmethod
    def coo_padding(nnz: int) -> int:
        padding = (nnz * IDX_BYTES) % VAL_BYTES
        return VAL_BYTES - padding if padding else 0

    @staticmethod
    def region_size(fmt: BlockFormat, nnz: int) -> int:
        return int(region_sizes(np.array([fmt]), np.array([nnz]))[0])

    @staticmethod
    def pack_block(b: Block, fmt: BlockFormat) -> bytes:
        """
        Serialise one sub-block into its packed byte region.

        COO:   nnz coordinate bytes, padding to 8, nnz FP64 values
        CSR:   17 row_ptr bytes, nnz column bytes, padding to 8, nnz FP64 values
        DENSE: 256 FP64 values, row-major, absent entries 0.0
        """
        nnz = b.nnz
        if not 1 <= nnz <= DENSE_VALUES:
            raise PackingError(f"cannot pack a block with {nnz} elements")
        values = b.vals.astype(VALUE_DTYPE).tobytes()
        if fmt == BlockFormat.COO:
            codes = ((b.local_cols.astype(np.uint8) << 4) | b.local_rows).astype(np.uint8)
            payload = codes.tobytes() + bytes(PackUtils.coo_padding(nnz)) + values
        elif fmt == BlockFormat.CSR:
            if nnz > CSR_MAX_NNZ:
                raise PackingError(f"CSR sub-blocks hold at most {CSR_MAX_NNZ} elements, got {nnz}")
            counts = np.bincount(b.local_rows, minlength=BLK_SIZE)
            row_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.uint8)
            header = row_ptr.tobytes() + b.local_cols.astype(np.uint8).tobytes()
            payload = header + bytes(align_up(len(header)) - len(header)) + values
        elif fmt == BlockFormat.DENSE:
            tile = np.zeros(DENSE_VALUES, dtype=VALUE_DTYPE)
            tile[b.local_rows.astype(np.int64) * BLK_SIZE + b.local_cols] = b.vals
            payload = tile.tobytes()
        else:
            raise PackingError(f"unknown block format {fmt}")
        return payload + bytes(align_up(len(payload)) - len(payload))

    @staticmethod
    def pack_matrix(b: BlockedCoo, agg: Optional[ColumnAggregationMap] = None,
                    th1: int = TH1_COO_BELOW, th2: int = TH2_DENSE_ABOVE) -> PackedMatrix:
        """
        Pack every block of b, in (blk_row, blk_col) order, into one contiguous buffer.

        If agg is given, b must be the column-aggregated BlockedCoo it was produced with.
        """
        nnz = b.nnz_per_block
        formats = PackUtils.select_formats(nnz, th1, th2)
        sizes = region_sizes(formats, nnz)
        vp = np.cumsum(sizes) - sizes
        buffer = np.zeros(int(sizes.sum()), dtype=np.uint8)
        values = buffer.view(VALUE_DTYPE)

        # every element written in one pass per format, same layout as pack_block
        owner = np.repeat(np.arange(b.block_count), nnz)
        k = np.arange(b.nnz) - b.blk_ptr[owner]
        fmt, start, count = formats[owner], vp[owner], nnz[owner]
        local_rows, local_cols = b.local_row.astype(np.int64), b.local_col.astype(np.int64)

        coo = fmt == BlockFormat.COO
        buffer[start[coo] + k[coo]] = (local_cols[coo] << 4) | local_rows[coo]
        values[(start[coo] + align_up(count[coo])) // VAL_BYTES + k[coo]] = b.vals[coo]

        csr = fmt == BlockFormat.CSR
        csr_blocks = np.flatnonzero(formats == BlockFormat.CSR)
        if len(csr_blocks):
            row_counts = np.bincount(owner[csr] * BLK_SIZE + local_rows[csr],
                                     minlength=b.block_count * BLK_SIZE).reshape(-1, BLK_SIZE)[csr_blocks]
            row_ptr = np.concatenate((np.zeros((len(csr_blocks), 1), dtype=np.int64),
                                      np.cumsum(row_counts, axis=1)), axis=1)
            buffer[vp[csr_blocks][:, None] + np.arange(ROW_PTR_LEN)] = row_ptr
        buffer[start[csr] + ROW_PTR_LEN + k[csr]] = local_cols[csr]
        values[(start[csr] + align_up(ROW_PTR_LEN + count[csr])) // VAL_BYTES + k[csr]] = b.vals[csr]

        dense = fmt == BlockFormat.DENSE
        values[start[dense] // VAL_BYTES + local_rows[dense] * BLK_SIZE + local_cols[dense]] = b.vals[dense]

        return PackedMatrix(
            n_rows=b.n_rows,
            n_cols=b.n_cols,
            blk_row_idx=b.blk_row_idx,
            blk_col_idx=b.blk_col_idx,
            nnz_per_blk=nnz,
            type_per_blk=formats,
            vp_per_blk=vp,
            mtx_data=buffer.tobytes(),
            agg=agg,
        )

    @staticmethod
    def block_region(p: PackedMatrix, i: int) -> tuple[BlockFormat, int, int, memoryview]:
        tag = int(p.type_per_blk[i])
        try:
            fmt = BlockFormat(tag)
        except ValueError:
            raise PackingError(f"block {i} carries corrupt format tag {tag}")
        nnz = int(p.nnz_per_blk[i])
        vp = int(p.vp_per_blk[i])
        size = PackUtils.region_size(fmt, nnz)
        if vp % VALUE_ALIGN or vp + size > len(p.mtx_data):
            raise PackingError(f"block {i} region [{vp}, {vp + size}) lies outside mtx_data ({len(p.mtx_data)} bytes)")
        return fmt, nnz, vp, memoryview(p.mtx_data)[vp:vp + size]

    @staticmethod
    def unpack_block(p: PackedMatrix, i: int) -> Block:
        if not 0 <= i < p.block_count:
            raise IndexError(f"block index {i} out of range for {p.block_count} blocks")
        fmt, nnz, _, region = PackUtils.block_region(p, i)
        data = np.frombuffer(region, dtype=np.uint8)
        if fmt == BlockFormat.COO:
            codes = data[:nnz]
            value_start = nnz * IDX_BYTES + PackUtils.coo_padding(nnz)
            values = np.frombuffer(region, dtype=VALUE_DTYPE, count=nnz, offset=value_start)
            local_rows, local_cols = codes & 15, codes >> 4
        elif fmt == BlockFormat.CSR:
            row_ptr = data[:ROW_PTR_LEN].astype(np.int64)
            if row_ptr[0] != 0 or row_ptr[-1] != nnz or np.any(np.diff(row_ptr) < 0):
                raise PackingError(f"block {i} has a corrupt CSR row pointer")
            local_rows = np.repeat(np.arange(BLK_SIZE), np.diff(row_ptr))
            local_cols = data[ROW_PTR_LEN:ROW_PTR_LEN + nnz]
            value_start = align_up(ROW_PTR_LEN + nnz)
            values = np.frombuffer(region, dtype=VALUE_DTYPE, count=nnz, offset=value_start)
        else:
            tile = np.frombuffer(region, dtype=VALUE_DTYPE, count=DENSE_VALUES)
            positions = np.flatnonzero(tile)
            local_rows, local_cols = np.divmod(positions, BLK_SIZE)
            values = tile[positions]
        return Block(
            blk_row=int(p.blk_row_idx[i]),
            blk_col=int(p.blk_col_idx[i]),
            local_rows=local_rows,
            local_cols=local_cols,
            vals=values.astype(np.float64),
        )

    @staticmethod
    def to_triplet(p: PackedMatrix) -> TripletMatrix:
        """Rebuild the original matrix, undoing column aggregation when present."""
        rows, cols, vals = [], [], []
        for i in range(p.block_count):
            block = PackUtils.unpack_block(p, i)
            block_rows = np.full(block.nnz, block.blk_row, dtype=np.int64)
            rows.append(block.blk_row * BLK_SIZE + block.local_rows.astype(np.int64))
            block_cols = block.blk_col * BLK_SIZE + block.local_cols.astype(np.int64)
            if p.agg is not None:
                block_cols = ColumnAggregation.restore_columns(p.agg, block_rows, block_cols)
                if np.any(block_cols < 0):
                    raise PackingError(f"block {i} references columns outside its aggregation segment")
            cols.append(block_cols)
            vals.append(block.vals)
        if not rows:
            return TripletMatrix.empty(p.n_rows, p.n_cols)
        all_rows, all_cols, all_vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        order = np.lexsort((all_cols, all_rows))
        return TripletMatrix(n_rows=p.n_rows, n_cols=p.n_cols,
                             rows=all_rows[order], cols=all_cols[order], vals=all_vals[order])
