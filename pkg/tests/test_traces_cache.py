import numpy as np
import pytest
from pydantic import ValidationError

from cbSpMV.models.matrix import TripletMatrix
from cbSpMV.models.packed import BlockFormat
from cbSpMV.models.settings import ACCEPTANCE_CACHE, CacheConfig, PipelineConfig
from cbSpMV.models.trace import AccessTrace
from cbSpMV.services.pipeline_service import PipelineService
from cbSpMV.utils.blocking import BlockingUtils
from cbSpMV.utils.cache_sim import CacheSimulator
from cbSpMV.utils.packing import PackUtils
from cbSpMV.utils.traces import TraceGenerator
from matrices import matrix_with_block_nnz, random_matrix

UNBALANCED = PipelineConfig(enable_balance=False)


def lru_oracle(trace: AccessTrace, c: CacheConfig) -> int:
    """Keeps the last-use time of every resident line and evicts the oldest one per set."""
    last_use = [dict() for _ in range(c.set_count)]
    hits = clock = 0
    for address, size in trace.accesses:
        for line in range(address // c.line_bytes, (address + size - 1) // c.line_bytes + 1):
            clock += 1
            resident = last_use[line % c.set_count]
            if line in resident:
                hits += 1
            elif len(resident) == c.associativity:
                del resident[min(resident, key=resident.get)]
            resident[line] = clock
    return hits


def test_csr_trace_of_single_element():
    trace = TraceGenerator.trace_csr(TripletMatrix.from_dense([[2.5]]))
    assert trace.accesses == [(0, 4), (4, 4), (8, 4), (12, 8)]


def test_csr_trace_order():
    trace = TraceGenerator.trace_csr(TripletMatrix.from_dense([[1.0, 2.0], [0.0, 3.0]]))
    assert trace.addresses.tolist() == [0, 4, 12, 24, 16, 32, 4, 8, 20, 40]
    assert trace.sizes.tolist() == [4, 4, 4, 8, 4, 8, 4, 4, 4, 8]


def test_csr_trace_of_empty_matrix_reads_row_pointers_only():
    trace = TraceGenerator.trace_csr(TripletMatrix.empty(3, 3))
    assert trace.addresses.tolist() == [0, 4, 4, 8, 8, 12]


def test_csr_trace_length(rng):
    m = random_matrix(rng, 123, 77, 0.05)
    assert len(TraceGenerator.trace_csr(m)) == 2 * m.n_rows + 2 * m.nnz


def test_cb_trace_of_one_coo_block():
    p = PackUtils.pack_matrix(BlockingUtils.partition(matrix_with_block_nnz([8])))
    trace = TraceGenerator.trace_cb(p)
    assert len(trace) == 5 + 16
    assert trace.accesses[:5] == [(0, 4), (8, 4), (16, 4), (24, 1), (32, 8)]
    payload = trace.addresses[5:]
    assert payload[0::2].tolist() == list(range(40, 48))
    assert payload[1::2].tolist() == list(range(48, 112, 8))
    assert trace.total_bytes - 21 == len(p.mtx_data)


def test_cb_trace_of_one_dense_block():
    p = PackUtils.pack_matrix(BlockingUtils.partition(matrix_with_block_nnz([200])))
    trace = TraceGenerator.trace_cb(p)
    assert len(trace) == 5 + 256
    payload = trace.addresses[5:]
    assert np.all(np.diff(payload) == 8)
    assert np.all(trace.sizes[5:] == 8)


def test_cb_trace_touches_payload_without_padding(rng):
    p = PackUtils.pack_matrix(BlockingUtils.partition(random_matrix(rng, 200, 200, 0.2)))
    nnz = p.nnz_per_blk.astype(np.int64)
    formats = p.type_per_blk
    useful = np.where(formats == BlockFormat.COO, 9 * nnz,
                      np.where(formats == BlockFormat.CSR, 17 + 9 * nnz, 256 * 8)).sum()
    trace = TraceGenerator.trace_cb(p)
    assert trace.total_bytes == 21 * p.block_count + useful
    assert useful <= len(p.mtx_data)
    _, data_base = TraceGenerator.cb_layout(p)
    payload = trace.addresses[trace.addresses >= data_base] - data_base
    assert payload.max() < len(p.mtx_data)


def test_trace_rejects_bad_sizes():
    with pytest.raises(ValidationError):
        AccessTrace(addresses=[0, 8], sizes=[4, 2])
    with pytest.raises(ValidationError):
        AccessTrace(addresses=[-8], sizes=[8])


def test_sequential_bytes_hit_one_line():
    trace = AccessTrace(addresses=np.arange(32), sizes=np.ones(32, dtype=np.int64))
    for cache in (ACCEPTANCE_CACHE, CacheConfig(capacity_bytes=128, line_bytes=128, associativity=1)):
        result = CacheSimulator.simulate(trace, cache)
        assert (result.accesses, result.hits) == (32, 31)
        assert CacheSimulator.simulate_cache(trace, cache) == pytest.approx(31 / 32)


def test_same_set_alternation_thrashes_direct_mapped_cache():
    cache = CacheConfig(capacity_bytes=1024, line_bytes=64, associativity=1)
    stride = cache.set_count * cache.line_bytes
    trace = AccessTrace(addresses=[0, stride] * 50, sizes=[8] * 100)
    assert CacheSimulator.simulate_cache(trace, cache) == 0.0


def test_access_spanning_two_lines_counts_twice():
    trace = AccessTrace(addresses=[124, 124], sizes=[8, 8])
    assert CacheSimulator.line_accesses(trace, 128).tolist() == [0, 1, 0, 1]
    result = CacheSimulator.simulate(trace, ACCEPTANCE_CACHE)
    assert (result.accesses, result.hits) == (4, 2)


def test_empty_trace_is_rejected():
    with pytest.raises(ValueError):
        CacheSimulator.simulate_cache(AccessTrace(addresses=[], sizes=[]), ACCEPTANCE_CACHE)


def test_cache_geometry_is_validated():
    with pytest.raises(ValidationError):
        CacheConfig(capacity_bytes=3000, line_bytes=128, associativity=8)
    with pytest.raises(ValidationError):
        CacheConfig(capacity_bytes=1024, line_bytes=128, associativity=16)


def test_full_capacity_hit_rate_is_one_minus_distinct_lines(rng):
    cache = CacheConfig(capacity_bytes=4096, line_bytes=64, associativity=4)
    addresses = rng.integers(0, cache.capacity_bytes, 5000)
    trace = AccessTrace(addresses=addresses, sizes=np.ones(5000, dtype=np.int64))
    distinct = len(np.unique(addresses // cache.line_bytes))
    assert CacheSimulator.simulate_cache(trace, cache) == pytest.approx(1 - distinct / 5000)


@pytest.mark.parametrize("capacity, line, ways", [(1024, 32, 2), (2048, 64, 1), (512, 16, 32), (4096, 128, 4)])
def test_matches_brute_force_lru(capacity, line, ways):
    rng = np.random.default_rng(capacity + ways)
    cache = CacheConfig(capacity_bytes=capacity, line_bytes=line, associativity=ways)
    # mostly local accesses with occasional jumps
    steps = np.where(rng.random(10_000) < 0.8, rng.integers(-64, 64, 10_000), rng.integers(-4096, 4096, 10_000))
    addresses = np.abs(np.cumsum(steps)) % 16384
    sizes = rng.choice([1, 4, 8], 10_000)
    trace = AccessTrace(addresses=addresses, sizes=sizes)
    assert CacheSimulator.simulate(trace, cache).hits == lru_oracle(trace, cache)


def test_cb_locality_not_worse_than_csr():
    rng = np.random.default_rng(4096)
    csr_rates, cb_rates = [], []
    for _ in range(20):
        n = int(rng.integers(2048, 2400))
        m = random_matrix(rng, n, n, float(rng.uniform(0.003, 0.01)))
        p, _ = PipelineService.build(m, UNBALANCED)
        csr_rates.append(CacheSimulator.simulate_cache(TraceGenerator.trace_csr(m), ACCEPTANCE_CACHE))
        cb_rates.append(CacheSimulator.simulate_cache(TraceGenerator.trace_cb(p), ACCEPTANCE_CACHE))
    assert np.median(cb_rates) >= np.median(csr_rates)
