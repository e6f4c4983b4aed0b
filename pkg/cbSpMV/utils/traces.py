import numpy as np

from cbSpMV.models.matrix import TripletMatrix
from cbSpMV.models.packed import BlockFormat, PackedMatrix, align_up
from cbSpMV.models.trace import AccessTrace

INDEX_BYTES = 4
VALUE_BYTES = 8
ROW_PTR_LEN = 17
DENSE_VALUES = 256
# blk_row_idx, blk_col_idx, nnz_per_blk, type_per_blk, vp_per_blk
METADATA_ITEM_BYTES = np.array([4, 4, 4, 1, 8], dtype=np.int64)


class TraceGenerator:
    @staticmethod
    def trace_csr(m: TripletMatrix) -> AccessTrace:
        """
        Reads of a row-per-thread CSR SpMV over [row_ptr | col_idx | csr_val] laid end-to-end.

        Row i reads row_ptr[i] and row_ptr[i+1], then col_idx[j] and csr_val[j] for each
        of its elements. x and y are not traced.
        """
        row_ptr, _, _ = m.to_csr()
        n_rows, nnz = m.n_rows, m.nnz
        col_base = INDEX_BYTES * (n_rows + 1)
        val_base = col_base + INDEX_BYTES * nnz
        addresses = np.empty(2 * n_rows + 2 * nnz, dtype=np.int64)
        sizes = np.empty_like(addresses)

        rows = np.arange(n_rows)
        row_pos = 2 * rows + 2 * row_ptr[:-1]
        addresses[row_pos] = INDEX_BYTES * rows
        addresses[row_pos + 1] = INDEX_BYTES * (rows + 1)
        sizes[row_pos] = sizes[row_pos + 1] = INDEX_BYTES

        elems = np.arange(nnz)
        elem_pos = 2 * m.rows + 2 + 2 * elems
        addresses[elem_pos] = col_base + INDEX_BYTES * elems
        sizes[elem_pos] = INDEX_BYTES
        addresses[elem_pos + 1] = val_base + VALUE_BYTES * elems
        sizes[elem_pos + 1] = VALUE_BYTES
        return AccessTrace(addresses=addresses, sizes=sizes)

    @staticmethod
    def cb_layout(p: PackedMatrix) -> tuple[np.ndarray, int]:
        """Base address of each of the five per-block arrays and of mtx_data, every base 8-byte aligned."""
        bases = np.zeros(len(METADATA_ITEM_BYTES), dtype=np.int64)
        offset = 0
        for k, item in enumerate(METADATA_ITEM_BYTES):
            bases[k] = offset
            offset = align_up(offset + int(item) * p.block_count)
        return bases, offset

    @staticmethod
    def trace_cb(p: PackedMatrix) -> AccessTrace:
        """
        Reads of the CB kernels over [five per-block arrays | mtx_data], blocks in stored order.

        Each block reads its five metadata entries, then its payload in kernel order:
        COO alternates coordinate byte and value, CSR reads 17 row_ptr bytes then alternates
        column byte and value, DENSE reads its 256 values. Aggregation arrays are not traced.
        """
        bases, data_base = TraceGenerator.cb_layout(p)
        formats = p.type_per_blk.astype(np.int64)
        nnz = p.nnz_per_blk.astype(np.int64)
        vp = p.vp_per_blk.astype(np.int64)
        payload = np.select([formats == BlockFormat.COO, formats == BlockFormat.CSR],
                            [2 * nnz, ROW_PTR_LEN + 2 * nnz], DENSE_VALUES)
        counts = len(METADATA_ITEM_BYTES) + payload
        owner = np.repeat(np.arange(p.block_count), counts)
        t = np.arange(len(owner)) - (np.cumsum(counts) - counts)[owner]

        fmt, n, start = formats[owner], nnz[owner], data_base + vp[owner]
        is_meta = t < len(METADATA_ITEM_BYTES)
        meta_slot = np.minimum(t, len(METADATA_ITEM_BYTES) - 1)
        meta_addr = bases[meta_slot] + METADATA_ITEM_BYTES[meta_slot] * owner

        u = t - len(METADATA_ITEM_BYTES)
        coo_addr = np.where(u % 2 == 0, start + u // 2, start + align_up(n) + VALUE_BYTES * (u // 2))
        w = u - ROW_PTR_LEN
        csr_addr = np.where(u < ROW_PTR_LEN, start + u,
                            np.where(w % 2 == 0, start + ROW_PTR_LEN + w // 2,
                                     start + align_up(ROW_PTR_LEN + n) + VALUE_BYTES * (w // 2)))
        dense_addr = start + VALUE_BYTES * u

        addresses = np.select([is_meta, fmt == BlockFormat.COO, fmt == BlockFormat.CSR],
                              [meta_addr, coo_addr, csr_addr], dense_addr)
        value_read = np.select([is_meta, fmt == BlockFormat.COO, fmt == BlockFormat.CSR],
                               [False, u % 2 == 1, (u >= ROW_PTR_LEN) & (w % 2 == 1)], True)
        sizes = np.where(is_meta, METADATA_ITEM_BYTES[meta_slot], np.where(value_read, VALUE_BYTES, 1))
        return AccessTrace(addresses=addresses, sizes=sizes)
