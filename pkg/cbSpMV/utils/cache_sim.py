from collections import OrderedDict

import numpy as np

from cbSpMV.models.reports import CacheResult, TraceFormat
from cbSpMV.models.settings import CacheConfig
from cbSpMV.models.trace import AccessTrace


class CacheSimulator:
    @staticmethod
    def line_accesses(t: AccessTrace, line_bytes: int) -> np.ndarray:
        """Cache lines touched in order; an access crossing a line boundary touches two."""
        first = t.addresses // line_bytes
        last = (t.addresses + t.sizes - 1) // line_bytes
        spans = 1 + (last > first)
        lines = np.repeat(first, spans)
        second = np.cumsum(spans) - 1
        lines[second[spans == 2]] += 1
        return lines

    @staticmethod
    def simulate(t: AccessTrace, c: CacheConfig, fmt: TraceFormat = "cb") -> CacheResult:
        """
        Replay a trace through a set-associative LRU cache, starting cold.

        Set = line mod set_count; each set keeps its resident lines in recency order.
        """
        if len(t) == 0:
            raise ValueError("cannot simulate an empty access trace")
        lines = CacheSimulator.line_accesses(t, c.line_bytes)
        set_count, ways = c.set_count, c.associativity
        sets: list[OrderedDict] = [OrderedDict() for _ in range(set_count)]
        hits = 0
        for line in lines.tolist():
            resident = sets[line % set_count]
            if line in resident:
                hits += 1
                resident.move_to_end(line)
            else:
                if len(resident) >= ways:
                    resident.popitem(last=False)
                resident[line] = None
        return CacheResult(format=fmt, config=repr(c), accesses=len(lines), hits=hits)

    @staticmethod
    def simulate_cache(t: AccessTrace, c: CacheConfig) -> float:
        return CacheSimulator.simulate(t, c).hit_rate
