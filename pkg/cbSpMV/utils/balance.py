import heapq
from typing import Union

import numpy as np

from cbSpMV.models.packed import WARPS_PER_TB, PackedMatrix, ThreadBlockSchedule
from cbSpMV.models.reports import LoadStats
from cbSpMV.utils.io import IOUtils


class LoadBalancer:
    @staticmethod
    def assign(nnz: np.ndarray, warps_per_tb: int = WARPS_PER_TB) -> tuple[np.ndarray, np.ndarray]:
        """
        Greedy largest-first assignment of blocks to thread-block warp slots.

        Blocks are visited by nnz descending (stable on the original index). Each one
        goes to the least-loaded thread block that still has a free warp, lowest
        tb_id first on equal loads.

        Returns:
            tuple: (slot of each block in input order, nnz load of each thread block)
        """
        if warps_per_tb < 1:
            raise ValueError("warps_per_tb must be at least 1")
        nnz = np.asarray(nnz, dtype=np.int64)
        tb_count = -(-len(nnz) // warps_per_tb)
        order = np.argsort(-nnz, kind="stable")
        slots = np.empty(len(nnz), dtype=np.int64)
        loads = np.zeros(tb_count, dtype=np.int64)
        # (load, tb_id, warps used)
        heap = [(0, tb_id, 0) for tb_id in range(tb_count)]
        heapq.heapify(heap)
        for block in order.tolist():
            load, tb_id, warps = heapq.heappop(heap)
            slots[block] = tb_id * warps_per_tb + warps
            load += int(nnz[block])
            loads[tb_id] = load
            if warps + 1 < warps_per_tb:
                heapq.heappush(heap, (load, tb_id, warps + 1))
        return slots, loads

    @staticmethod
    def balance(p: PackedMatrix, warps_per_tb: int = WARPS_PER_TB) -> PackedMatrix:
        """
        Reorder the block metadata so that thread blocks carry similar nnz loads.

        The five per-block arrays are permuted into slot order and a schedule is
        attached. mtx_data is shared untouched; each vp_per_blk entry moves with its block.
        """
        slots, loads = LoadBalancer.assign(p.nnz_per_blk, warps_per_tb)
        perm = np.argsort(slots, kind="stable")
        schedule = ThreadBlockSchedule(
            warps_per_tb=warps_per_tb,
            tb_count=len(loads),
            slot_of_block=slots[perm],
            load_per_tb=loads,
        )
        IOUtils.print(f"Balanced {p.block_count} blocks over {schedule.tb_count} thread blocks")
        return p.model_copy(update={
            "blk_row_idx": p.blk_row_idx[perm],
            "blk_col_idx": p.blk_col_idx[perm],
            "nnz_per_blk": p.nnz_per_blk[perm],
            "type_per_blk": p.type_per_blk[perm],
            "vp_per_blk": p.vp_per_blk[perm],
            "schedule": schedule,
        })

    @staticmethod
    def naive_schedule(p: PackedMatrix, warps_per_tb: int = WARPS_PER_TB) -> ThreadBlockSchedule:
        """Consecutive groups of warps_per_tb blocks in stored order."""
        slots = np.arange(p.block_count, dtype=np.int64)
        tb_count = -(-p.block_count // warps_per_tb)
        loads = np.bincount(slots // warps_per_tb, weights=p.nnz_per_blk, minlength=tb_count)
        return ThreadBlockSchedule(warps_per_tb=warps_per_tb, tb_count=tb_count,
                                   slot_of_block=slots, load_per_tb=loads.astype(np.int64))

    @staticmethod
    def load_stats(s: Union[ThreadBlockSchedule, np.ndarray]) -> LoadStats:
        loads = s.load_per_tb if isinstance(s, ThreadBlockSchedule) else np.asarray(s, dtype=np.int64)
        if len(loads) == 0:
            return LoadStats(mean=0.0, stddev=0.0, max=0, min=0)
        # population standard deviation
        return LoadStats(mean=float(loads.mean()), stddev=float(loads.std()),
                         max=int(loads.max()), min=int(loads.min()))
