from pathlib import Path
from typing import Union

import numpy as np

from cbSpMV.models.packed import PackedMatrix
from cbSpMV.utils.container import CBSM_HEADER, CBSM_MAGIC, CBSM_VERSION, SCHEDULE_HEADER


class CbsmContainerGenerator:
    @staticmethod
    def generate(p: PackedMatrix) -> bytes:
        """Serialise a packed matrix; every multi-byte field is little-endian."""
        parts = [
            CBSM_HEADER.pack(CBSM_MAGIC, CBSM_VERSION, p.n_rows, p.n_cols, p.block_count, len(p.mtx_data),
                             p.agg is not None, p.schedule is not None),
            p.blk_row_idx.astype("<u4").tobytes(),
            p.blk_col_idx.astype("<u4").tobytes(),
            p.nnz_per_blk.astype("<u4").tobytes(),
            p.type_per_blk.astype("u1").tobytes(),
            p.vp_per_blk.astype("<u8").tobytes(),
        ]
        if p.agg is not None:
            parts.append(p.agg.cols_offset.astype("<u8").tobytes())
            parts.append(p.agg.restore_cols.astype("<u4").tobytes())
        if p.schedule is not None:
            s = p.schedule
            parts.append(SCHEDULE_HEADER.pack(s.warps_per_tb, s.tb_count))
            parts.append(s.slot_of_block.astype("<u8").tobytes())
            parts.append(np.asarray(s.load_per_tb).astype("<u8").tobytes())
        parts.append(p.mtx_data)
        return b"".join(parts)

    @staticmethod
    def write(p: PackedMatrix, path: Union[str, Path]):
        Path(path).write_bytes(CbsmContainerGenerator.generate(p))
