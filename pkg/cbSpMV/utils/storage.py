from cbSpMV.models.packed import PackedMatrix
from cbSpMV.models.reports import StorageReport

INDEX_BYTES = 4
VALUE_BYTES = 8
COORD_BYTES = 1
TYPE_BYTES = 1
VP_BYTES = 8
BSR_TILE_VALUES = 16 * 16


class StorageModel:
    @staticmethod
    def storage_model(m: int, n: int, nnz: int, nnzb: int, blk_m: int) -> StorageReport:
        """
        Analytic byte counts of CSR, 16x16 BSR and CB storage.

        csr = (m+1)*4 + nnz*4 + nnz*8
        bsr = 256*8*nnzb + (blk_m+1)*4 + nnzb*4
        cb  = nnzb*(4+4+4+1+8) + nnz*(1+8)
        """
        if min(m, n, nnz, nnzb, blk_m) < 0:
            raise ValueError("storage model counts must be non-negative")
        csr = (m + 1) * INDEX_BYTES + nnz * (INDEX_BYTES + VALUE_BYTES)
        bsr = BSR_TILE_VALUES * VALUE_BYTES * nnzb + (blk_m + 1) * INDEX_BYTES + nnzb * INDEX_BYTES
        cb = nnzb * (3 * INDEX_BYTES + TYPE_BYTES + VP_BYTES) + nnz * (COORD_BYTES + VALUE_BYTES)
        return StorageReport(m=m, n=n, nnz=nnz, nnzb=nnzb, blk_m=blk_m,
                             csr_bytes=csr, bsr_bytes=bsr, cb_bytes=cb)

    @staticmethod
    def measured_bytes(p: PackedMatrix) -> int:
        """Bytes actually held by a packed matrix: the five arrays, mtx_data and any aggregation map."""
        total = sum(a.nbytes for a in (p.blk_row_idx, p.blk_col_idx, p.nnz_per_blk, p.type_per_blk, p.vp_per_blk))
        total += len(p.mtx_data)
        if p.agg is not None:
            total += p.agg.cols_offset.size * VP_BYTES + p.agg.restore_cols.size * INDEX_BYTES
        return total

    @staticmethod
    def measure(p: PackedMatrix) -> StorageReport:
        report = StorageModel.storage_model(p.n_rows, p.n_cols, p.nnz, p.block_count, p.blk_m)
        return report.model_copy(update={"measured_cb_bytes": StorageModel.measured_bytes(p)})
