import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from cbSpMV.models.errors import ContainerFormatError
from cbSpMV.models.matrix import BLK_SIZE
from cbSpMV.models.packed import ColumnAggregationMap, PackedMatrix, ThreadBlockSchedule
from cbSpMV.utils.io import PathLike

CBSM_MAGIC = b"CBSM"
CBSM_VERSION = 1
# magic, version, n_rows, n_cols, block_count, mtx_data_len, has_agg, has_schedule
CBSM_HEADER = struct.Struct("<4sIQQQQBB")
SCHEDULE_HEADER = struct.Struct("<IQ")


class _Cursor:
    def __init__(self, buffer: bytes, source: str):
        self.buffer = buffer
        self.source = source
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.buffer):
            raise ContainerFormatError(
                f"{self.source}: truncated container, {what} needs {size} bytes at offset {self.offset} "
                f"but only {len(self.buffer) - self.offset} remain")
        chunk = self.buffer[self.offset:end]
        self.offset = end
        return chunk

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count, what), dtype=dtype).astype(dtype.newbyteorder("="))

    def unpack(self, layout: struct.Struct, what: str) -> tuple:
        return layout.unpack(self.take(layout.size, what))


class ContainerIO:
    @staticmethod
    def parse(buffer: bytes, source: str = "<memory>") -> PackedMatrix:
        """
        Decode a CBSM container.

        Raises:
            ContainerFormatError: bad magic, unsupported version, truncated or
                inconsistent payload
        """
        cursor = _Cursor(buffer, source)
        magic, version, n_rows, n_cols, block_count, data_len, has_agg, has_schedule = \
            cursor.unpack(CBSM_HEADER, "header")
        if magic != CBSM_MAGIC:
            raise ContainerFormatError(f"{source}: bad magic {magic!r}, expected {CBSM_MAGIC!r}")
        if version != CBSM_VERSION:
            raise ContainerFormatError(f"{source}: unsupported container version {version}")

        arrays = {
            "blk_row_idx": cursor.array("<u4", block_count, "blk_row_idx"),
            "blk_col_idx": cursor.array("<u4", block_count, "blk_col_idx"),
            "nnz_per_blk": cursor.array("<u4", block_count, "nnz_per_blk"),
            "type_per_blk": cursor.array("u1", block_count, "type_per_blk"),
            "vp_per_blk": cursor.array("<u8", block_count, "vp_per_blk"),
        }
        try:
            agg = None
            if has_agg:
                blk_m = -(-n_rows // BLK_SIZE)
                cols_offset = cursor.array("<u8", blk_m + 1, "cols_offset")
                restore_cols = cursor.array("<u4", int(cols_offset[-1]), "restore_cols")
                agg = ColumnAggregationMap(cols_offset=cols_offset, restore_cols=restore_cols)
            schedule = None
            if has_schedule:
                warps_per_tb, tb_count = cursor.unpack(SCHEDULE_HEADER, "schedule header")
                slots = cursor.array("<u8", block_count, "slot_of_block")
                loads = cursor.array("<u8", tb_count, "load_per_tb")
                schedule = ThreadBlockSchedule(warps_per_tb=warps_per_tb, tb_count=tb_count,
                                               slot_of_block=slots, load_per_tb=loads)
            mtx_data = cursor.take(data_len, "mtx_data")
            if cursor.offset != len(buffer):
                raise ContainerFormatError(f"{source}: {len(buffer) - cursor.offset} trailing bytes after mtx_data")
            return PackedMatrix(n_rows=n_rows, n_cols=n_cols, mtx_data=mtx_data, agg=agg, schedule=schedule, **arrays)
        except ValidationError as e:
            raise ContainerFormatError(f"{source}: inconsistent container contents ({e.errors()[0]['msg']})")

    @staticmethod
    def read(path: PathLike) -> PackedMatrix:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Container file {path} does not exist")
        return ContainerIO.parse(path.read_bytes(), source=str(path))
