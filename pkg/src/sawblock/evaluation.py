"""Exact oracles, the paired-simulation suspension estimator, and baselines."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ._backend import kernels
from .coverage import CoverageIndex, greedy_max_cover
from .graph import ProbGraph, SuspectSet
from .prng import Prg
from .sampler import enumerate_hsaws, prepare, reverse_reachable_walk

BASELINES = ("pagerank", "maxdegree", "randomized", "infmaxv", "infmaxvi")
_EMPTY_U8 = np.empty(0, dtype=np.uint8)


@dataclass(frozen=True)
class RemovalSet:
    """Edges or nodes taken out of the graph; removing a node drops its edges."""

    kind: str
    ids: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("edge", "node"):
            raise ValueError(f"removal kind must be 'edge' or 'node', not {self.kind!r}")
        object.__setattr__(self, "ids", frozenset(int(x) for x in self.ids))

    @classmethod
    def of(cls, kind: str, ids: Iterable[int]) -> "RemovalSet":
        return cls(kind, frozenset(ids))

    def validate(self, g: ProbGraph) -> None:
        size = g.m if self.kind == "edge" else g.n
        bad = [x for x in self.ids if not 0 <= x < size]
        if bad:
            raise ValueError(f"removal id {bad[0]} outside 0..{size - 1}")

    def edge_mask(self, g: ProbGraph) -> np.ndarray:
        m = np.zeros(g.m, dtype=np.uint8)
        if self.kind == "edge" and self.ids:
            m[list(self.ids)] = 1
        return m

    def node_mask(self, g: ProbGraph) -> np.ndarray:
        m = np.zeros(g.n, dtype=np.uint8)
        if self.kind == "node" and self.ids:
            m[list(self.ids)] = 1
        return m


def lt_forward_simulate(g: ProbGraph, vi: SuspectSet, state: int):
    """One live-edge run: returns ``(state, infected_count)``.

    Per node in id order: a seed draw when the node is a suspect, then the
    live in-edge draw. Infected nodes are those whose live-edge trace reaches
    a seed.
    """
    state, _, infected, _ = kernels.simulate(prepare(g, vi), _EMPTY_U8, _EMPTY_U8, state, 1, 1)
    return state, infected


@dataclass(frozen=True)
class SuspensionEstimate:
    value: float
    runs: int
    state: int
    capped: bool


def stopping_threshold(epsilon: float, delta: float) -> float:
    """``1 + (1+eps) * 4(e-2) ln(2/delta) / eps^2``: sum needed before stopping."""
    return 1.0 + (1.0 + epsilon) * 4.0 * (math.e - 2.0) * math.log(2.0 / delta) / epsilon ** 2


def estimate_suspension_detail(g: ProbGraph, vi: SuspectSet, r: RemovalSet, epsilon: float,
                               delta: float, state: int,
                               draw_cap: int = 10**9) -> SuspensionEstimate:
    """(epsilon, delta) relative-error estimate of the suspension of ``r``.

    Paired runs on the graph and its residual share every random draw; the
    per-run drop in infected count, scaled by ``1/n`` into ``[0, 1]``, is
    summed until it passes the stopping threshold.
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    r.validate(g)
    if not r.ids:
        return SuspensionEstimate(0.0, 0, state, False)
    upsilon = stopping_threshold(epsilon, delta)
    threshold = math.ceil(g.n * upsilon)
    max_runs = max(1, draw_cap // max(g.n, 1))
    state, runs, _, diff = kernels.simulate(prepare(g, vi), r.edge_mask(g), r.node_mask(g),
                                            state, max_runs, threshold)
    if diff < threshold:
        return SuspensionEstimate(0.0, runs, state, True)
    return SuspensionEstimate(g.n * upsilon / runs, runs, state, False)


def estimate_suspension(g: ProbGraph, vi: SuspectSet, r: RemovalSet, epsilon: float,
                        delta: float, state: int) -> float:
    return estimate_suspension_detail(g, vi, r, epsilon, delta, state).value


def _enumeration_size(g: ProbGraph, vi: SuspectSet, with_seeds: bool) -> int:
    size = int(np.prod(g.in_degree().astype(object) + 1))
    return size * (2 ** len(vi) if with_seeds else 1)


def _trace_infected(parent, seeds, alive):
    """Infected flags by following each node's unique live-edge trace."""
    n = len(parent)
    out = [False] * n
    for v in range(n):
        if not alive[v]:
            continue
        x, seen = v, set()
        while x >= 0 and x not in seen:
            if seeds[x]:
                out[v] = True
                break
            seen.add(x)
            x = parent[x]
    return out


def brute_force_suspension(g: ProbGraph, vi: SuspectSet, r: RemovalSet,
                           method: str = "realizations", limit: int = 10**7) -> float:
    """Exact suspension by exhaustive enumeration.

    ``realizations`` enumerates every live-edge choice and every seed set;
    ``traces`` enumerates live-edge choices only and folds seed probabilities
    along each node's trace.
    """
    r.validate(g)
    if not r.ids:
        return 0.0
    with_seeds = method == "realizations"
    if method not in ("realizations", "traces"):
        raise ValueError(f"unknown method {method!r}")
    if _enumeration_size(g, vi, with_seeds) > limit:
        raise ValueError(f"enumeration exceeds {limit} outcomes")
    n = g.n
    rem_e = r.edge_mask(g).astype(bool)
    rem_n = r.node_mask(g).astype(bool)
    alive = [not x for x in rem_n]
    choices = []
    for v in range(n):
        opts = [(u, e, float(g.edge_weight[e])) for u, e in g.in_adj(v)]
        none_p = 1.0 - sum(w for _, _, w in opts)
        opts = [(-1, -1, max(none_p, 0.0))] + opts
        choices.append([o for o in opts if o[2] > 0.0])
    members = vi.members()
    seed_sets = []
    if with_seeds:
        for bits in itertools.product((0, 1), repeat=len(members)):
            p = 1.0
            seeds = [False] * n
            for b, (v, pv) in zip(bits, members):
                p *= pv if b else 1.0 - pv
                seeds[v] = bool(b)
            if p > 0.0:
                seed_sets.append((p, seeds))
    prob = vi.prob_of
    total = []
    for combo in itertools.product(*choices):
        w = math.prod(c[2] for c in combo)
        parent = [c[0] for c in combo]
        rparent = []
        for v, (u, e, _) in enumerate(combo):
            cut = u < 0 or rem_e[e] or rem_n[v] or rem_n[u]
            rparent.append(-1 if cut else u)
        if with_seeds:
            for p, seeds in seed_sets:
                rseeds = [s and a for s, a in zip(seeds, alive)]
                a = sum(_trace_infected(parent, seeds, [True] * n))
                b = sum(_trace_infected(rparent, rseeds, alive))
                total.append(w * p * (a - b))
        else:
            total.append(w * (_trace_prob(parent, prob, None) - _trace_prob(rparent, prob, alive)))
    return math.fsum(total)


def _trace_prob(parent, prob, alive) -> float:
    """Expected infected count of one live-edge realization over seed draws."""
    n = len(parent)
    acc = []
    for v in range(n):
        if alive is not None and not alive[v]:
            continue
        miss, x, seen = 1.0, v, set()
        while x >= 0 and x not in seen:
            if alive is not None and not alive[x]:
                break
            miss *= 1.0 - prob[x]
            seen.add(x)
            x = parent[x]
        acc.append(1.0 - miss)
    return math.fsum(acc)


class ExactOracle:
    """Exact spread and suspension from the full list of hitting walks.

    A node is infected exactly when its live-edge trace reaches a seed, and
    the first seed on the trace fixes a unique hitting walk; removing items
    suspends precisely the walks they touch. Exponential in graph size.
    """

    def __init__(self, g: ProbGraph, vi: SuspectSet):
        self.g = g
        walks, probs = [], []
        for nodes, p in enumerate_hsaws(g, vi):
            walks.append(nodes)
            probs.append(p)
        self.walks = walks
        self.probs = np.array(probs, dtype=np.float64)
        self.node_hit = np.zeros((len(walks), g.n), dtype=bool)
        self.edge_hit = np.zeros((len(walks), g.m), dtype=bool)
        for i, nodes in enumerate(walks):
            self.node_hit[i, list(nodes)] = True
            for a, b in zip(nodes, nodes[1:]):
                self.edge_hit[i, g.edge_id(b, a)] = True

    def influence(self) -> float:
        return math.fsum(self.probs)

    def suspension(self, kind: str, ids) -> float:
        ids = list(ids)
        if not ids or len(self.probs) == 0:
            return 0.0
        hit = self.edge_hit if kind == "edge" else self.node_hit
        return float(self.probs @ hit[:, ids].any(axis=1))

    def optimum(self, kind: str, candidates, k: int):
        """Best ``k``-subset of ``candidates`` by exhaustive search: ``(value, ids)``."""
        hit = self.edge_hit if kind == "edge" else self.node_hit
        best, best_ids = -1.0, ()
        for ids in itertools.combinations(sorted(candidates), k):
            val = float(self.probs @ hit[:, list(ids)].any(axis=1)) if len(self.probs) else 0.0
            if val > best + 1e-15:
                best, best_ids = val, ids
        return best, list(best_ids)


def pagerank(g: ProbGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 200):
    """Power-iteration PageRank on the unweighted edge structure."""
    n = g.n
    outdeg = g.out_degree().astype(np.float64)
    src, dst = np.asarray(g.edge_src), np.asarray(g.edge_dst)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        share = np.where(outdeg > 0, x / np.maximum(outdeg, 1.0), 0.0)
        nxt = np.bincount(dst, weights=share[src], minlength=n)
        dangling = x[outdeg == 0].sum()
        nxt = damping * (nxt + dangling / n) + (1.0 - damping) / n
        done = np.abs(nxt - x).sum() < tol
        x = nxt
        if done:
            break
    return x


def _rank(scores: np.ndarray, pool: np.ndarray) -> list[int]:
    """``pool`` sorted by descending score, ties to the smaller id."""
    return [int(v) for v in sorted(pool.tolist(), key=lambda v: (-scores[v], v))]


def _rr_ranking(g: ProbGraph, pool: np.ndarray, state: int, samples: int) -> list[int]:
    """Nodes of ``pool`` in greedy order over reverse-reachable walks."""
    sets = []
    for _ in range(samples):
        state, nodes = reverse_reachable_walk(g, state)
        sets.append(nodes)
    mask = np.zeros(g.n, dtype=bool)
    mask[pool] = True
    idx = CoverageIndex.from_sets("node", sets, g.n, mask)
    order, _ = greedy_max_cover(idx, pool, len(pool))
    return order


def _edges_round_robin(g: ProbGraph, ranked: list[int], k: int) -> list[int]:
    """Take chosen nodes' in-edges by descending weight, one per node per round."""
    lists = []
    for v in ranked:
        adj = g.in_adj(v)
        if adj:
            lists.append(sorted((e for _, e in adj), key=lambda e: (-g.edge_weight[e], e)))
    head = lists[:k]
    out: list[int] = []
    depth = 0
    while len(out) < k and any(depth < len(x) for x in head):
        for x in head:
            if depth < len(x) and len(out) < k:
                out.append(x[depth])
        depth += 1
    for x in lists[k:]:
        for e in x:
            if len(out) < k:
                out.append(e)
    return out


def baseline(g: ProbGraph, vi: SuspectSet, kind: str, mode: str, k: int, state: int,
             rr_samples: int = 10000) -> RemovalSet:
    """A comparator removal set of ``k`` edges or nodes."""
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")
    if mode not in ("edge", "node"):
        raise ValueError("mode must be 'edge' or 'node'")
    universe = g.m if mode == "edge" else g.n
    if k < 1 or k > universe:
        raise ValueError(f"budget k={k} outside 1..{universe}")
    nodes = np.arange(g.n, dtype=np.int64)
    if kind == "randomized":
        rng = Prg(state)
        pool = list(range(universe))
        for i in range(k):
            j = i + rng.below(universe - i)
            pool[i], pool[j] = pool[j], pool[i]
        return RemovalSet.of(mode, pool[:k])
    if kind == "pagerank":
        ranked = _rank(pagerank(g), nodes)
    elif kind == "maxdegree":
        ranked = _rank((g.in_degree() + g.out_degree()).astype(np.float64), nodes)
    else:
        pool = nodes if kind == "infmaxv" else np.sort(vi.nodes)
        if mode == "node" and k > len(pool):
            raise ValueError(f"budget k={k} exceeds {len(pool)} candidates")
        ranked = _rr_ranking(g, pool, state, rr_samples)
    if mode == "node":
        return RemovalSet.of("node", ranked[:k])
    edges = _edges_round_robin(g, ranked, k)
    if len(edges) < k:
        raise ValueError(f"only {len(edges)} edges enter the ranked nodes")
    return RemovalSet.of("edge", edges)


def analyze_solution(g: ProbGraph, vi: SuspectSet, r: RemovalSet):
    """``(ssr, cost)`` of a node removal: suspect share and the suspicion-weighted cost."""
    if r.kind != "node":
        raise ValueError("solution analysis needs a node removal set")
    if not r.ids:
        raise ValueError("solution analysis needs a non-empty set")
    indeg = g.in_degree()
    ssr = sum(1 for v in r.ids if v in vi) / len(r.ids)
    cost = math.fsum((1.0 - vi.lookup(v)) * math.log(indeg[v] + 1) for v in r.ids)
    return ssr, cost


def write_curves(path, rows: Iterable[dict]) -> None:
    """CSV of suspension curves with columns ``method,k,suspension``."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["method", "k", "suspension"], extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def suspension_curves(g: ProbGraph, vi: SuspectSet, mode: str, ks: Iterable[int],
                      methods: Iterable[str], state: int, epsilon: float = 0.1,
                      delta: float = 0.1, evaluator: Optional[callable] = None,
                      draw_cap: int = 10**9) -> list[dict]:
    """Suspension of each method's removal set for each budget."""
    from .interdiction import interdict

    rows = []
    for k in ks:
        for method in methods:
            if method == "sia":
                res = interdict(mode, g, vi, None, k, epsilon, delta, seed=state)
                r = RemovalSet.of(mode, res.solution)
            else:
                r = baseline(g, vi, method, mode, k, state)
            if evaluator is not None:
                val = evaluator(r)
            else:
                val = estimate_suspension_detail(g, vi, r, epsilon, delta, state,
                                                 draw_cap).value
            rows.append({"method": method, "k": k, "suspension": val})
    return rows
