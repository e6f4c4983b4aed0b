import numpy as np
from pydantic import field_validator, model_validator

from cbSpMV.models.matrix import ArrayModel, as_array

ACCESS_SIZES = (1, 4, 8)


class AccessTrace(ArrayModel):
    """Sequence of (byte address, access size) reads in a flat model address space."""
    addresses: np.ndarray
    sizes: np.ndarray

    @field_validator("addresses", "sizes", mode="before")
    @classmethod
    def _int_array(cls, value):
        return as_array(value, np.int64)

    @model_validator(mode="after")
    def _check_accesses(self):
        if len(self.addresses) != len(self.sizes):
            raise ValueError("addresses and sizes must have equal length")
        if len(self.addresses) and self.addresses.min() < 0:
            raise ValueError("addresses must be non-negative")
        if not np.all(np.isin(self.sizes, ACCESS_SIZES)):
            raise ValueError(f"access sizes must be one of {ACCESS_SIZES}")
        return self

    @property
    def accesses(self) -> list[tuple[int, int]]:
        return list(zip(self.addresses.tolist(), self.sizes.tolist()))

    @property
    def total_bytes(self) -> int:
        return int(self.sizes.sum())

    def __len__(self) -> int:
        return len(self.addresses)
