"""Small random instances and hand-built graphs shared by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from sawblock.graph import ProbGraph, SuspectSet


def two_node():
    """a <- b with weight 0.5; b is a certain seed. Node 0 is a, node 1 is b."""
    g = ProbGraph.from_edges(2, [1], [0], [0.5])
    return g, SuspectSet.from_pairs([(1, 1.0)], 2)


def random_instance(seed: int, n: int = 12, m: int = 20, suspects: int = 2,
                    prob_range=(0.2, 1.0)):
    """Random simple digraph with LT weights and a few suspects.

    Each node keeps a random fraction in [0.5, 1] of in-weight mass, so some
    walks die early and some run long.
    """
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u, v in itertools.permutations(range(n), 2)]
    pick = rng.choice(len(pairs), size=m, replace=False)
    src = np.array([pairs[i][0] for i in pick])
    dst = np.array([pairs[i][1] for i in pick])
    raw = rng.uniform(0.1, 1.0, size=m)
    total = np.bincount(dst, weights=raw, minlength=n)
    keep = rng.uniform(0.5, 1.0, size=n)
    w = np.minimum(raw / total[dst] * keep[dst], 1.0)
    g = ProbGraph.from_edges(n, src, dst, w)
    nodes = rng.choice(n, size=suspects, replace=False)
    probs = rng.uniform(*prob_range, size=suspects)
    return g, SuspectSet(np.asarray(nodes, dtype=np.int64), probs, n)


def functional_graph(n: int, seed: int, suspect_frac: float = 0.05):
    """Every node has exactly one in-edge of weight 1, so reverse walks are cyclic unless accepted."""
    rng = np.random.default_rng(seed)
    parent = rng.integers(0, n - 1, size=n)
    parent = parent + (parent >= np.arange(n))
    g = ProbGraph.from_edges(n, parent, np.arange(n), np.ones(n))
    count = max(1, int(n * suspect_frac))
    nodes = rng.choice(n, size=count, replace=False)
    return g, SuspectSet(np.asarray(nodes, dtype=np.int64), rng.uniform(0.05, 0.5, size=count), n)
