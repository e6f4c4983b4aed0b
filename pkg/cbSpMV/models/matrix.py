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

from typing import Any, Iterator, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

BLK_SIZE = 16

Entry = tuple[int, int, float]


def as_array(value: Any, dtype) -> np.ndarray:
    array = np.ascontiguousarray(value, dtype=dtype)
    if array.ndim != 1:
        raise ValueError(f"expected a 1-D array, got shape {array.shape}")
    return array


class ArrayModel(BaseModel):
    """Immutable model holding numpy arrays; equality compares arrays element-wise."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def __eq__(self, other: object) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        for name in type(self).model_fields:
            mine, theirs = getattr(self, name), getattr(other, name)
            if isinstance(mine, np.ndarray) or isinstance(theirs, np.ndarray):
                if not np.array_equal(mine, theirs):
                    return False
            elif mine != theirs:
                return False
        return True

    __hash__ = None  # type: ignore[assignment]


class TripletMatrix(ArrayModel):
    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @field_validator("rows", "cols", mode="before")
    @classmethod
    def _index_array(cls, value):
        return as_array(value, np.int64)

    @field_validator("vals", mode="before")
    @classmethod
    def _value_array(cls, value):
        return as_array(value, np.float64)

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ValueError("rows, cols and vals must have equal length")
        if len(self.rows):
            if self.rows.min() < 0 or self.rows.max() >= self.n_rows:
                raise ValueError("row index out of bounds")
            if self.cols.min() < 0 or self.cols.max() >= self.n_cols:
                raise ValueError("column index out of bounds")
        return self

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @property
    def entries(self) -> list[Entry]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    def is_canonical(self) -> bool:
        if np.any(self.vals == 0.0):
            return False
        keys = self.rows * max(self.n_cols, 1) + self.cols
        return bool(np.all(np.diff(keys) > 0))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_rows, self.n_cols))
        np.add.at(dense, (self.rows, self.cols), self.vals)
        return dense

    def to_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        CSR arrays of a canonical matrix.

        Returns:
            tuple: (row_ptr of length n_rows+1, col_idx, val)
        """
        counts = np.bincount(self.rows, minlength=self.n_rows)
        row_ptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum(counts, out=row_ptr[1:])
        return row_ptr, self.cols.copy(), self.vals.copy()

    @staticmethod
    def from_dense(dense) -> "TripletMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        rows, cols = np.nonzero(dense)
        return TripletMatrix(n_rows=dense.shape[0], n_cols=dense.shape[1],
                             rows=rows, cols=cols, vals=dense[rows, cols])

    @staticmethod
    def empty(n_rows: int, n_cols: int) -> "TripletMatrix":
        return TripletMatrix(n_rows=n_rows, n_cols=n_cols, rows=[], cols=[], vals=[])


class Block(ArrayModel):
    blk_row: int
    blk_col: int
    local_rows: np.ndarray
    local_cols: np.ndarray
    vals: np.ndarray

    @field_validator("local_rows", "local_cols", mode="before")
    @classmethod
    def _local_array(cls, value):
        array = np.asarray(value)
        if array.size and (array.min() < 0 or array.max() >= BLK_SIZE):
            raise ValueError(f"local coordinates must lie in 0..{BLK_SIZE - 1}")
        return as_array(array, np.uint8)

    @field_validator("vals", mode="before")
    @classmethod
    def _value_array(cls, value):
        return as_array(value, np.float64)

    @model_validator(mode="after")
    def _check_order(self):
        if not (len(self.local_rows) == len(self.local_cols) == len(self.vals)):
            raise ValueError("block element arrays must have equal length")
        keys = self.local_rows.astype(np.int64) * BLK_SIZE + self.local_cols
        if np.any(np.diff(keys) <= 0):
            raise ValueError("block elements must be sorted by (local_row, local_col) without duplicates")
        return self

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @property
    def elems(self) -> list[Entry]:
        return list(zip(self.local_rows.tolist(), self.local_cols.tolist(), self.vals.tolist()))

    def to_dense(self) -> np.ndarray:
        tile = np.zeros((BLK_SIZE, BLK_SIZE))
        tile[self.local_rows, self.local_cols] = self.vals
        return tile


class BlockedCoo(ArrayModel):
    """
    A matrix split into 16x16 sub-blocks, stored HiCOO-style as flat arrays.

    Block i owns elements blk_ptr[i]..blk_ptr[i+1] of local_row/local_col/vals.
    Only non-empty blocks are stored, ordered by (blk_row, blk_col).
    """
    n_rows: int
    n_cols: int
    blk_size: Literal[16] = BLK_SIZE
    blk_row_idx: np.ndarray
    blk_col_idx: np.ndarray
    blk_ptr: np.ndarray
    local_row: np.ndarray
    local_col: np.ndarray
    vals: np.ndarray

    @field_validator("blk_row_idx", "blk_col_idx", "blk_ptr", mode="before")
    @classmethod
    def _index_array(cls, value):
        return as_array(value, np.int64)

    @field_validator("local_row", "local_col", mode="before")
    @classmethod
    def _local_array(cls, value):
        return as_array(value, np.uint8)

    @field_validator("vals", mode="before")
    @classmethod
    def _value_array(cls, value):
        return as_array(value, np.float64)

    @model_validator(mode="after")
    def _check_structure(self):
        n_blocks = len(self.blk_row_idx)
        if len(self.blk_col_idx) != n_blocks or len(self.blk_ptr) != n_blocks + 1:
            raise ValueError("block index arrays are inconsistent")
        if self.blk_ptr[0] != 0 or self.blk_ptr[-1] != len(self.vals):
            raise ValueError("blk_ptr must span all elements")
        if not (len(self.local_row) == len(self.local_col) == len(self.vals)):
            raise ValueError("element arrays must have equal length")
        if n_blocks == 0:
            return self
        nnz = np.diff(self.blk_ptr)
        if nnz.min() < 1 or nnz.max() > BLK_SIZE * BLK_SIZE:
            raise ValueError("every stored block must hold 1..256 elements")
        if self.blk_row_idx.min() < 0 or self.blk_row_idx.max() >= self.blk_m:
            raise ValueError("block row index out of bounds")
        if self.blk_col_idx.min() < 0 or self.blk_col_idx.max() >= self.blk_n:
            raise ValueError("block column index out of bounds")
        keys = self.blk_row_idx * self.blk_n + self.blk_col_idx
        if np.any(np.diff(keys) <= 0):
            raise ValueError("blocks must be strictly ordered by (blk_row, blk_col)")
        if self.local_row.max() >= BLK_SIZE or self.local_col.max() >= BLK_SIZE:
            raise ValueError("local coordinates must lie in 0..15")
        owner = np.repeat(np.arange(n_blocks), nnz)
        global_rows = self.blk_row_idx[owner] * BLK_SIZE + self.local_row
        global_cols = self.blk_col_idx[owner] * BLK_SIZE + self.local_col
        if global_rows.max() >= self.n_rows or global_cols.max() >= self.n_cols:
            raise ValueError("block element lies outside the matrix")
        local_keys = owner * (BLK_SIZE * BLK_SIZE) + self.local_row.astype(np.int64) * BLK_SIZE + self.local_col
        if np.any(np.diff(local_keys) <= 0):
            raise ValueError("block elements must be sorted by (local_row, local_col)")
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
        return len(self.vals)

    @property
    def nnz_per_block(self) -> np.ndarray:
        return np.diff(self.blk_ptr)

    def block(self, i: int) -> Block:
        start, end = int(self.blk_ptr[i]), int(self.blk_ptr[i + 1])
        # already validated as part of this structure
        return Block.model_construct(
            blk_row=int(self.blk_row_idx[i]),
            blk_col=int(self.blk_col_idx[i]),
            local_rows=self.local_row[start:end],
            local_cols=self.local_col[start:end],
            vals=self.vals[start:end],
        )

    @property
    def blocks(self) -> Iterator[Block]:
        for i in range(self.block_count):
            yield self.block(i)

    def __len__(self) -> int:
        return self.block_count
