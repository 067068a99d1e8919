import io
import math

import numpy as np
import pytest

from instances import functional_graph, random_instance, two_node
from sawblock._backend import kernels, python_kernels
from sawblock.errors import ReplayError, SamplingExhausted
from sawblock.graph import ProbGraph, SuspectSet, random_suspects, synth_graph
from sawblock.prng import prg_next, seed_state
from sawblock.sampler import (DETECTORS, EncodedWalk, SampleStream, decode_walk,
                              detect_cycle_brent, detect_cycle_floyd, enumerate_hsaws,
                              estimate_influence, prepare, record_walks, sample_hsaw_naive,
                              stream_samples, thread_sample, total_hit_mass, walk_probability)

_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_U8 = np.empty(0, dtype=np.uint8)


def test_naive_two_node_walks():
    g, vi = two_node()
    s = seed_state(1)
    walks, attempts = [], 0
    for _ in range(20000):
        s, sample, used = sample_hsaw_naive(g, vi, s)
        walks.append(sample.nodes)
        attempts += used
    assert set(walks) == {(1,), (0, 1)}
    # a start at b is accepted at once; a start at a needs the live edge
    rate = len(walks) / attempts
    sigma = math.sqrt(0.75 * 0.25 / attempts)
    assert abs(rate - 0.75) <= 3 * sigma
    assert abs(walks.count((0, 1)) / len(walks) - 1 / 3) < 0.015


def test_naive_no_suspects_exhausts():
    g, _ = two_node()
    with pytest.raises(SamplingExhausted):
        sample_hsaw_naive(g, SuspectSet.from_pairs([], 2), seed_state(0), max_attempts=1000)


def test_naive_samples_are_hsaws():
    g, vi = random_instance(3, n=10, m=25, suspects=3)
    s = seed_state(3)
    for _ in range(2000):
        s, h, _ = sample_hsaw_naive(g, vi, s)
        assert len(set(h.nodes)) == len(h.nodes)
        assert h.hit in vi
        assert len(h.edge_ids) == len(h.nodes) - 1
        for (a, b), e in zip(zip(h.nodes, h.nodes[1:]), h.edge_ids):
            assert (g.edge_src[e], g.edge_dst[e]) == (b, a)


def test_thread_sample_deterministic_and_bounded():
    g, vi = random_instance(4, n=10, m=25, suspects=3)
    a = thread_sample(g, vi, worker_id=3, l=50)
    assert a == thread_sample(g, vi, worker_id=3, l=50)
    assert a != thread_sample(g, vi, worker_id=4, l=50)
    assert [w.seq for w in a] == list(range(len(a)))
    assert len(thread_sample(g, vi, worker_id=3, l=1)) <= 1
    with pytest.raises(ValueError):
        thread_sample(g, vi, 0, l=0)


def test_thread_sample_acceptance_rate():
    g, vi = two_node()
    walks = thread_sample(g, vi, worker_id=7, l=10**4)
    sigma = math.sqrt(0.75 * 0.25 / 10**4)
    assert abs(len(walks) / 10**4 - 0.75) <= 3 * sigma


def test_decode_round_trip():
    g, vi = random_instance(5, n=10, m=25, suspects=3)
    for ew in thread_sample(g, vi, worker_id=1, l=500):
        h = decode_walk(g, vi, ew)
        if h is None:
            continue
        assert len(h.nodes) == ew.len + 1
        assert h.hit in vi


def test_decode_wrong_seed_is_an_error():
    g, vi = two_node()
    # no walk in this graph is longer than one edge
    with pytest.raises(ReplayError):
        decode_walk(g, vi, EncodedWalk(seed_state(123), 3))


def test_decode_three_cycle_is_always_cyclic():
    g = ProbGraph.from_edges(4, [0, 1, 2, 3], [1, 2, 0, 0], [1.0, 1.0, 0.5, 0.5])
    vi = SuspectSet.from_pairs([(3, 1.0)], 4)
    starts = np.array([0, 1, 2], dtype=np.int64)
    for i in range(200):
        # walks from the cycle either fall off to node 3 or loop; force long lengths
        ew = EncodedWalk(seed_state(i), 10)
        try:
            h = decode_walk(g, vi, ew, starts)
        except ReplayError:
            continue
        assert h is None


def test_decode_on_pure_cycle_returns_none():
    g = ProbGraph.from_edges(3, [0, 1, 2], [1, 2, 0], [1.0, 1.0, 1.0])
    vi = SuspectSet.from_pairs([], 3)
    for i in range(100):
        assert decode_walk(g, vi, EncodedWalk(seed_state(i), 5)) is None


def test_cycle_detectors_generic():
    two_cycle = {0: 1, 1: 0}
    assert detect_cycle_floyd(two_cycle.get, 0)
    assert detect_cycle_brent(two_cycle.get, 0)
    chain = {0: 1, 1: 2, 2: None}
    assert not detect_cycle_floyd(chain.get, 0)
    assert not detect_cycle_brent(chain.get, 0)


def test_cycle_detectors_match_exact_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        nxt = {v: (None if rng.random() < 0.1 else int(rng.integers(0, n))) for v in range(n)}
        for x0 in range(n):
            seen, x, cyclic = set(), x0, False
            while x is not None:
                if x in seen:
                    cyclic = True
                    break
                seen.add(x)
                x = nxt[x]
            assert detect_cycle_floyd(nxt.get, x0) == cyclic
            assert detect_cycle_brent(nxt.get, x0) == cyclic


@pytest.mark.parametrize("detector", ["brent", "floyd", "none", "exact"])
def test_heuristic_detectors_emit_only_decodable_walks(detector):
    g, vi = functional_graph(300, seed=1)
    stream = SampleStream(g, vi, seed=2, detector=detector)
    pool = stream.pool(500)
    for h in pool:
        assert len(set(h.nodes)) == len(h.nodes)


def test_draw_budget_per_attempt():
    g, vi = random_instance(6, n=10, m=25, suspects=4)
    prep = prepare(g, vi, python_kernels)
    checked = 0
    for i in range(500):
        state = seed_state(6, i)
        record = []
        end, _, seeds, lens, _ = python_kernels.generate(
            prep, state, 1, 1, DETECTORS["brent"], 2, g.n, _EMPTY_I64, _EMPTY_U8, record)
        if not len(seeds):
            continue
        path = record[0]
        draws = 1 + int(lens[0]) + sum(1 for v in path if v in vi)
        s = state
        for _ in range(draws):
            s, _ = prg_next(s)
        assert s == end
        checked += 1
    assert checked > 50


def test_record_matches_decode():
    g, vi = random_instance(7, n=12, m=30, suspects=3)
    encoded, record = record_walks(g, vi, seed_state(7), 2000)
    assert len(encoded) == len(record)
    for ew, path in zip(encoded, record):
        h = decode_walk(g, vi, ew)
        if h is None:
            assert len(set(path)) < len(path)
        else:
            assert list(h.nodes) == path


def test_stream_workers_one_is_serial():
    g, vi = random_instance(8, n=12, m=30, suspects=3)
    a = SampleStream(g, vi, seed=3).pool(3000)
    b = SampleStream(g, vi, seed=3, chunk_attempts=17).pool(3000)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.offsets, b.offsets)
    prep = prepare(g, vi)
    state = seed_state(3, 0)
    _, _, seeds, lens, _ = kernels.generate(prep, state, 10**6, 5000, DETECTORS["brent"], 2,
                                            g.n, _EMPTY_I64, _EMPTY_U8)
    ok, offs, nodes, _ = kernels.decode(prep, seeds, lens, _EMPTY_I64)
    assert np.array_equal(nodes[:len(a.nodes)], a.nodes)


def test_stream_multi_worker_deterministic():
    g, vi = random_instance(9, n=12, m=30, suspects=3)
    a = stream_samples(g, vi, workers=4, until=4001, seed=5)
    b = stream_samples(g, vi, workers=4, until=4001, seed=5)
    assert np.array_equal(a.nodes, b.nodes) and a.attempts == b.attempts
    assert a.worker.tolist() == sorted(a.worker.tolist())
    assert np.bincount(a.worker).tolist() == [1001, 1000, 1000, 1000]


def test_stream_prefix_is_stable():
    g, vi = random_instance(10, n=12, m=30, suspects=3)
    s = SampleStream(g, vi, seed=1)
    small = s.pool(1000)
    big = s.pool(4000)
    assert np.array_equal(big.offsets[:1001], small.offsets)
    assert np.array_equal(big.nodes[:len(small.nodes)], small.nodes)
    assert len(s.encoded(4000)) == 4000


def test_stream_smoke_large_graph():
    g = synth_graph(10**5, 10, 0)
    vi = random_suspects(g, 1000, 0)
    pool = stream_samples(g, vi, until=10**5)
    assert len(pool) == 10**5
    assert 0 < pool.accepted / pool.attempts <= 1


def test_stream_attempt_cap():
    g, _ = two_node()
    with pytest.raises(SamplingExhausted):
        SampleStream(g, SuspectSet.from_pairs([], 2), attempt_cap=1000).pool(1)


def test_influence_two_node():
    g, vi = two_node()
    pool = stream_samples(g, vi, until=10**6, seed=1)
    assert abs(estimate_influence(pool, g.n) - 1.5) <= 0.01


def test_influence_all_certain_suspects():
    g, _ = random_instance(11, n=4, m=6, suspects=1)
    vi = SuspectSet.from_pairs([(v, 1.0) for v in range(4)], 4)
    pool = stream_samples(g, vi, until=10**4)
    assert estimate_influence(pool, 4) == pytest.approx(4.0, rel=0.01)


def test_influence_no_suspects():
    g, _ = two_node()
    vi = SuspectSet.from_pairs([], 2)
    _, attempts, seeds, _, _ = kernels.generate(prepare(g, vi), seed_state(0), 1000, 1000,
                                                1, 2, g.n, _EMPTY_I64, _EMPTY_U8)
    assert estimate_influence((len(seeds), attempts), g.n) == 0.0
    with pytest.raises(ValueError):
        estimate_influence((0, 0), 2)


def test_walk_law_helpers():
    g, vi = two_node()
    law = dict(enumerate_hsaws(g, vi))
    assert law == {(1,): 1.0, (0, 1): 0.5}
    assert walk_probability(g, vi, (0, 1)) == 0.5
    assert total_hit_mass(g, vi) == pytest.approx(0.75)


def test_pool_accessors_and_dump():
    g, vi = random_instance(12, n=8, m=16, suspects=2)
    pool = stream_samples(g, vi, workers=2, until=10, seed=0)
    assert len(pool.samples) == 10
    assert pool[-1] == pool[9]
    with pytest.raises(IndexError):
        pool[10]
    buf = io.StringIO()
    pool.dump(buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 10
    w, seq, length, *nodes = map(int, lines[0].split())
    assert (w, seq) == (0, 0) and length == len(nodes) - 1
    assert tuple(nodes) == pool[0].nodes
    offs, items = pool.item_csr("edge", 2, 5)
    assert offs[0] == 0 and len(offs) == 4
    assert items.tolist() == [e for i in range(2, 5) for e in pool[i].edge_ids]


def test_unknown_detector():
    g, vi = two_node()
    with pytest.raises(ValueError):
        SampleStream(g, vi, detector="tortoise")
    with pytest.raises(ValueError):
        SampleStream(g, vi, workers=0)
