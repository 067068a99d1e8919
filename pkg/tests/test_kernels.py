import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import functional_graph, random_instance
from sawblock._backend import compiled_kernels, python_kernels
from sawblock.graph import ProbGraph, SuspectSet
from sawblock.prng import seed_state
from sawblock.sampler import DETECTORS, prepare

ck = compiled_kernels()
needs_compiled = pytest.mark.skipif(ck is None, reason="compiled kernels not built")

_I64 = np.empty(0, dtype=np.int64)
_U8 = np.empty(0, dtype=np.uint8)


def _generate(mod, g, vi, state, attempts, detector, starts=_I64, allowed=_U8, window=2):
    return mod.generate(prepare(g, vi, mod), state, attempts, attempts, DETECTORS[detector],
                        window, g.n, starts, allowed)


def _same(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        if isinstance(x, np.ndarray):
            assert np.array_equal(x, y)
        else:
            assert x == y


@needs_compiled
@pytest.mark.parametrize("detector", sorted(DETECTORS))
@pytest.mark.parametrize("window", [0, 2, 4])
def test_generate_parity(detector, window):
    g, vi = random_instance(70, n=15, m=40, suspects=3)
    state = seed_state(70)
    _same(_generate(python_kernels, g, vi, state, 3000, detector, window=window),
          _generate(ck, g, vi, state, 3000, detector, window=window))


@needs_compiled
@pytest.mark.parametrize("detector", sorted(DETECTORS))
def test_generate_parity_functional_graph(detector):
    g, vi = functional_graph(200, seed=3)
    state = seed_state(71)
    _same(_generate(python_kernels, g, vi, state, 2000, detector),
          _generate(ck, g, vi, state, 2000, detector))


@needs_compiled
def test_generate_parity_restricted():
    g, vi = random_instance(72, n=15, m=40, suspects=3)
    starts = np.array([1, 4, 9], dtype=np.int64)
    allowed = np.zeros(g.n, dtype=np.uint8)
    allowed[[1, 2, 4, 5, 9, 11]] = 1
    state = seed_state(72)
    py = _generate(python_kernels, g, vi, state, 3000, "brent", starts, allowed)
    _same(py, _generate(ck, g, vi, state, 3000, "brent", starts, allowed))
    assert py[4] > 0


@needs_compiled
def test_decode_parity():
    g, vi = random_instance(73, n=15, m=40, suspects=3)
    _, _, seeds, lens, _ = _generate(ck, g, vi, seed_state(73), 5000, "none")
    _same(python_kernels.decode(prepare(g, vi, python_kernels), seeds, lens, _I64),
          ck.decode(prepare(g, vi, ck), seeds, lens, _I64))


@needs_compiled
def test_simulate_parity():
    g, vi = random_instance(74, n=15, m=40, suspects=3)
    rem_edge = np.zeros(g.m, dtype=np.uint8)
    rem_edge[[0, 5, 9]] = 1
    rem_node = np.zeros(g.n, dtype=np.uint8)
    rem_node[2] = 1
    state = seed_state(74)
    for threshold in (50, 1 << 62):
        _same(python_kernels.simulate(prepare(g, vi, python_kernels), rem_edge, _U8, state,
                                      2000, threshold),
              ck.simulate(prepare(g, vi, ck), rem_edge, _U8, state, 2000, threshold))
        _same(python_kernels.simulate(prepare(g, vi, python_kernels), _U8, rem_node, state,
                                      2000, threshold),
              ck.simulate(prepare(g, vi, ck), _U8, rem_node, state, 2000, threshold))


@needs_compiled
def test_fill_u01_parity():
    state = seed_state(75)
    _same(python_kernels.fill_u01(state, 1000), ck.fill_u01(state, 1000))


@st.composite
def instances(draw):
    n = draw(st.integers(2, 9))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
                          .filter(lambda e: e[0] != e[1]), max_size=25, unique=True))
    src = [u for u, _ in pairs]
    dst = [v for _, v in pairs]
    indeg = np.bincount(dst, minlength=n) if pairs else np.zeros(n, dtype=int)
    w = [draw(st.floats(0.05, 1.0)) / indeg[v] for v in dst]
    g = ProbGraph.from_edges(n, src, dst, w)
    nodes = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    vi = SuspectSet.from_pairs([(v, draw(st.floats(0.05, 1.0))) for v in nodes], n)
    return g, vi, draw(st.integers(0, 2**32))


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(instances(), st.sampled_from(sorted(DETECTORS)))
def test_random_graph_parity(inst, detector):
    g, vi, seed = inst
    state = seed_state(seed)
    py = _generate(python_kernels, g, vi, state, 300, detector)
    _same(py, _generate(ck, g, vi, state, 300, detector))
    _same(python_kernels.decode(prepare(g, vi, python_kernels), py[2], py[3], _I64),
          ck.decode(prepare(g, vi, ck), py[2], py[3], _I64))


@pytest.mark.parametrize("flag, want", [("1", "python"), ("0", None)])
def test_backend_selection(flag, want):
    env = dict(os.environ, SAWBLOCK_PURE_PYTHON=flag)
    proc = subprocess.run([sys.executable, "-c",
                           "from sawblock._backend import BACKEND; print(BACKEND)"],
                          env=env, capture_output=True, text=True, check=True)
    expected = want or ("cython" if ck is not None else "python")
    assert proc.stdout.strip() == expected
