import csv
import math

import numpy as np
import pytest

from instances import random_instance, two_node
from sawblock._backend import kernels
from sawblock.evaluation import (ExactOracle, RemovalSet, analyze_solution, baseline,
                                 brute_force_suspension, estimate_suspension,
                                 estimate_suspension_detail, lt_forward_simulate, pagerank,
                                 stopping_threshold, suspension_curves, write_curves)
from sawblock.graph import ProbGraph, SuspectSet
from sawblock.prng import seed_state
from sawblock.sampler import prepare

_NONE = np.empty(0, dtype=np.uint8)


def test_forward_chain():
    g = ProbGraph.from_edges(3, [0, 1], [1, 2], [1.0, 1.0])
    vi = SuspectSet.from_pairs([(0, 1.0)], 3)
    s = seed_state(0)
    for _ in range(10):
        s, infected = lt_forward_simulate(g, vi, s)
        assert infected == 3


def test_forward_no_suspects():
    g, _ = two_node()
    _, infected = lt_forward_simulate(g, SuspectSet.from_pairs([], 2), seed_state(0))
    assert infected == 0


def test_forward_mean_two_node():
    g, vi = two_node()
    _, runs, total, _ = kernels.simulate(prepare(g, vi), _NONE, _NONE, seed_state(1),
                                         10**6, 1 << 62)
    assert runs == 10**6
    assert abs(total / runs - 1.5) <= 0.01


def test_estimate_empty_removal_is_zero():
    g, vi = two_node()
    assert estimate_suspension(g, vi, RemovalSet("edge"), 0.1, 0.1, seed_state(0)) == 0.0


def test_estimate_two_node():
    g, vi = two_node()
    edge = estimate_suspension(g, vi, RemovalSet.of("edge", [0]), 0.05, 0.1, seed_state(2))
    node = estimate_suspension(g, vi, RemovalSet.of("node", [1]), 0.05, 0.1, seed_state(3))
    assert edge == pytest.approx(0.5, rel=0.05)
    assert node == pytest.approx(1.5, rel=0.05)


def test_estimate_caps_on_zero_suspension():
    g = ProbGraph.from_edges(3, [1], [0], [0.5])
    vi = SuspectSet.from_pairs([(1, 1.0)], 3)
    est = estimate_suspension_detail(g, vi, RemovalSet.of("node", [2]), 0.1, 0.1,
                                     seed_state(0), draw_cap=3000)
    assert est.capped and est.value == 0.0 and est.runs == 1000


def test_estimate_nonnegative_and_domain():
    g, vi = random_instance(31, n=8, m=14, suspects=2)
    for i in range(10):
        r = RemovalSet.of("edge", [i % g.m])
        assert estimate_suspension(g, vi, r, 0.3, 0.3, seed_state(i)) >= 0.0
    with pytest.raises(ValueError):
        estimate_suspension(g, vi, RemovalSet.of("edge", [0]), 0.0, 0.1, 0)
    with pytest.raises(ValueError):
        estimate_suspension(g, vi, RemovalSet.of("edge", [g.m]), 0.1, 0.1, 0)


def test_stopping_threshold():
    want = 1 + 1.1 * 4 * (math.e - 2) * math.log(20) / 0.01
    assert stopping_threshold(0.1, 0.1) == pytest.approx(want, rel=1e-14)


def test_brute_force_examples():
    g, vi = two_node()
    assert brute_force_suspension(g, vi, RemovalSet("edge")) == 0.0
    assert brute_force_suspension(g, vi, RemovalSet.of("edge", [0])) == 0.5
    assert brute_force_suspension(g, vi, RemovalSet.of("node", [1])) == 1.5
    assert brute_force_suspension(g, vi, RemovalSet.of("node", [0])) == 0.5


def test_brute_force_methods_and_oracle_agree():
    for seed in range(8):
        g, vi = random_instance(40 + seed, n=7, m=12, suspects=3)
        oracle = ExactOracle(g, vi)
        rng = np.random.default_rng(seed)
        for kind, size in (("edge", g.m), ("node", g.n)):
            ids = rng.choice(size, size=2, replace=False).tolist()
            r = RemovalSet.of(kind, ids)
            full = brute_force_suspension(g, vi, r)
            assert brute_force_suspension(g, vi, r, method="traces") == pytest.approx(full, abs=1e-12)
            assert oracle.suspension(kind, ids) == pytest.approx(full, abs=1e-12)


def test_brute_force_monotone():
    g, vi = random_instance(50, n=7, m=12, suspects=2)
    prev = 0.0
    for j in range(g.m + 1):
        d = brute_force_suspension(g, vi, RemovalSet.of("edge", range(j)), method="traces")
        assert d >= prev - 1e-12
        prev = d


def test_brute_force_limits():
    g, vi = random_instance(51, n=12, m=40, suspects=6)
    with pytest.raises(ValueError, match="enumeration"):
        brute_force_suspension(g, vi, RemovalSet.of("edge", [0]), limit=1000)
    with pytest.raises(ValueError):
        brute_force_suspension(g, vi, RemovalSet.of("edge", [0]), method="guess")


def test_oracle_optimum_and_influence():
    g, vi = two_node()
    oracle = ExactOracle(g, vi)
    assert oracle.influence() == 1.5
    assert oracle.optimum("node", [0, 1], 1) == (1.5, [1])


def test_maxdegree_star():
    g = ProbGraph.from_edges(5, [1, 2, 3, 4], [0, 0, 0, 0], [0.25] * 4)
    vi = SuspectSet.from_pairs([(1, 0.5)], 5)
    assert baseline(g, vi, "maxdegree", "node", 1, 0).ids == {0}
    edges = baseline(g, vi, "maxdegree", "edge", 2, 0).ids
    assert edges == {0, 1}


def test_randomized_is_seeded():
    g, vi = random_instance(52)
    a = baseline(g, vi, "randomized", "edge", 4, seed_state(1))
    assert a == baseline(g, vi, "randomized", "edge", 4, seed_state(1))
    assert len(a.ids) == 4


def test_pagerank_is_a_distribution():
    g, _ = random_instance(53)
    pr = pagerank(g)
    assert pr.sum() == pytest.approx(1.0)
    assert np.all(pr > 0)


@pytest.mark.parametrize("method", ["pagerank", "maxdegree", "randomized", "infmaxv", "infmaxvi"])
@pytest.mark.parametrize("mode", ["edge", "node"])
def test_baselines_return_k_items(method, mode):
    g, vi = random_instance(54, n=12, m=30, suspects=3)
    r = baseline(g, vi, method, mode, 3, seed_state(2), rr_samples=500)
    assert r.kind == mode and len(r.ids) == 3
    r.validate(g)


def test_baseline_errors():
    g, vi = random_instance(55)
    with pytest.raises(ValueError):
        baseline(g, vi, "oracle", "edge", 1, 0)
    with pytest.raises(ValueError):
        baseline(g, vi, "pagerank", "node", 0, 0)
    with pytest.raises(ValueError):
        baseline(g, vi, "infmaxvi", "node", 3, 0)


def test_analyze_solution():
    g = ProbGraph.from_edges(4, [1, 2, 3], [0, 0, 0], [0.2, 0.2, 0.2])
    vi = SuspectSet.from_pairs([(0, 0.5), (1, 1.0)], 4)
    assert analyze_solution(g, vi, RemovalSet.of("node", [1])) == (1.0, 0.0)
    ssr, cost = analyze_solution(g, vi, RemovalSet.of("node", [0]))
    assert ssr == 1.0 and cost == pytest.approx(0.5 * math.log(4))
    assert analyze_solution(g, vi, RemovalSet.of("node", [2, 3]))[0] == 0.0
    with pytest.raises(ValueError):
        analyze_solution(g, vi, RemovalSet("node"))
    with pytest.raises(ValueError):
        analyze_solution(g, vi, RemovalSet.of("edge", [0]))


def test_curves_csv(tmp_path):
    g, vi = random_instance(56, n=10, m=18, suspects=2)
    oracle = ExactOracle(g, vi)
    rows = suspension_curves(g, vi, "edge", [1, 2], ["sia", "maxdegree"], 7,
                             evaluator=lambda r: oracle.suspension(r.kind, r.ids))
    path = tmp_path / "curves.csv"
    write_curves(path, rows)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert [(r["method"], r["k"]) for r in got] == [("sia", "1"), ("maxdegree", "1"),
                                                    ("sia", "2"), ("maxdegree", "2")]


def test_removal_set_kind():
    with pytest.raises(ValueError):
        RemovalSet("face")
