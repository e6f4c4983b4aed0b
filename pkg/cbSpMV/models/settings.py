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

from typing import Literal

from pydantic import BaseModel, Field, model_validator

ExecMode = Literal["sequential", "parallel_tb"]
AggMode = Literal["auto", "on", "off"]
CachePolicy = Literal["LRU"]

# Thresholds of the preprocessing pipeline
TH0_SUPER_SPARSE_FRACTION = 0.15
TH1_COO_BELOW = 32
TH2_DENSE_ABOVE = 128


class PipelineConfig(BaseModel):
    th0: float = Field(default=TH0_SUPER_SPARSE_FRACTION, ge=0.0, le=1.0)
    th1: int = Field(default=TH1_COO_BELOW, ge=1, le=256)
    th2: int = Field(default=TH2_DENSE_ABOVE, ge=1, le=256)
    warps_per_tb: int = Field(default=8, ge=1)
    mode: ExecMode = "sequential"
    enable_agg: AggMode = "auto"
    enable_balance: bool = True
    threads: int = Field(default=0, ge=0)  # 0 = hardware default

    @model_validator(mode="after")
    def _check_thresholds(self):
        if self.th1 > self.th2:
            raise ValueError(f"th1 ({self.th1}) must not exceed th2 ({self.th2})")
        return self


def _is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


class CacheConfig(BaseModel):
    capacity_bytes: int
    line_bytes: int
    associativity: int
    policy: CachePolicy = "LRU"

    @model_validator(mode="after")
    def _check_geometry(self):
        for name in ("capacity_bytes", "line_bytes", "associativity"):
            if not _is_power_of_two(getattr(self, name)):
                raise ValueError(f"{name} must be a power of two")
        if self.capacity_bytes % (self.line_bytes * self.associativity):
            raise ValueError("capacity_bytes must be divisible by line_bytes * associativity")
        return self

    @property
    def set_count(self) -> int:
        return self.capacity_bytes // (self.line_bytes * self.associativity)

    def __repr__(self):
        return f"{self.capacity_bytes // 1024}KB/{self.line_bytes}B/{self.associativity}-way {self.policy}"


# one SM's L1 and a scaled-down L2
L1_CACHE = CacheConfig(capacity_bytes=128 * 1024, line_bytes=128, associativity=4)
L2_CACHE = CacheConfig(capacity_bytes=1024 * 1024, line_bytes=128, associativity=16)
ACCEPTANCE_CACHE = CacheConfig(capacity_bytes=32 * 1024, line_bytes=128, associativity=8)

CACHE_LEVELS: dict[str, CacheConfig] = {
    "l1": L1_CACHE,
    "l2": L2_CACHE,
    "small": ACCEPTANCE_CACHE,
}
