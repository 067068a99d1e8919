"""Sample coverage index, greedy maximum coverage, and the stopping schedule."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import ProbGraph

E = math.e


class CoverageIndex:
    """Forward (sample -> items) and inverted (item -> samples) CSR indexes.

    Only items flagged in ``candidate_mask`` are indexed; a sample is covered
    by a set ``T`` when it contains at least one item of ``T``.
    """

    def __init__(self, kind: str, offsets, items, universe: int, candidate_mask=None):
        self.kind = kind
        self.universe = universe
        offsets = np.asarray(offsets, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        self.num_samples = len(offsets) - 1
        sample_of = np.repeat(np.arange(self.num_samples, dtype=np.int64), np.diff(offsets))
        if candidate_mask is not None:
            keep = np.asarray(candidate_mask, dtype=bool)[items]
            items, sample_of = items[keep], sample_of[keep]
        counts = np.bincount(sample_of, minlength=self.num_samples)
        self.fwd_offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        self.fwd_items = items
        order = np.argsort(items, kind="stable")
        self.inv_samples = sample_of[order]
        deg = np.bincount(items, minlength=universe)
        self.inv_offsets = np.concatenate(([0], np.cumsum(deg))).astype(np.int64)

    @classmethod
    def from_sets(cls, kind: str, sets: Sequence[Sequence[int]], universe: int, candidate_mask=None):
        lens = [len(s) for s in sets]
        offsets = np.concatenate(([0], np.cumsum(lens))).astype(np.int64)
        items = np.fromiter((x for s in sets for x in s), dtype=np.int64, count=int(offsets[-1]))
        return cls(kind, offsets, items, universe, candidate_mask)

    @classmethod
    def from_pool(cls, pool, kind: str, universe: int, candidate_mask=None, start=0, stop=None):
        offsets, items = pool.item_csr(kind, start, stop)
        return cls(kind, offsets, items, universe, candidate_mask)

    def __len__(self) -> int:
        return self.num_samples

    def samples_of(self, item: int) -> np.ndarray:
        return self.inv_samples[self.inv_offsets[item]:self.inv_offsets[item + 1]]

    def items_of(self, sample: int) -> np.ndarray:
        return self.fwd_items[self.fwd_offsets[sample]:self.fwd_offsets[sample + 1]]

    def degree(self, item: int) -> int:
        return int(self.inv_offsets[item + 1] - self.inv_offsets[item])

    def covered(self, solution) -> np.ndarray:
        mask = np.zeros(self.num_samples, dtype=bool)
        for x in solution:
            mask[self.samples_of(int(x))] = True
        return mask

    def coverage(self, solution) -> int:
        """Cov(T): number of samples containing some item of ``solution``."""
        return int(self.covered(solution).sum())


def _check_budget(candidates: np.ndarray, k: int) -> None:
    if k < 0:
        raise ValueError("budget must be non-negative")
    if k > len(candidates):
        raise ValueError(f"budget {k} exceeds {len(candidates)} candidates")


def greedy_max_cover(idx: CoverageIndex, candidates, k: int):
    """Lazy greedy maximum coverage.

    Each round adds the candidate with the largest marginal coverage, ties to
    the smallest id. Stale heap entries are upper bounds by submodularity, so
    the result equals the naive greedy. Returns ``(solution, coverage)``.
    """
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    _check_budget(cand, k)
    covered = np.zeros(idx.num_samples, dtype=bool)
    heap = [(-idx.degree(int(c)), int(c), 0) for c in cand]
    heapq.heapify(heap)
    chosen: list[int] = []
    taken = set()
    total = 0
    rnd = 0
    while len(chosen) < k:
        neg, c, stamp = heapq.heappop(heap)
        if stamp != rnd:
            gain = int(np.count_nonzero(~covered[idx.samples_of(c)]))
            heapq.heappush(heap, (-gain, c, rnd))
            continue
        if neg == 0:
            # every remaining candidate has zero gain: pad by smallest id
            rest = sorted({c} | {x for _, x, _ in heap} - taken)
            chosen.extend(rest[:k - len(chosen)])
            break
        chosen.append(c)
        taken.add(c)
        covered[idx.samples_of(c)] = True
        total -= neg
        rnd += 1
    return chosen, total


def greedy_max_cover_naive(idx: CoverageIndex, candidates, k: int):
    """Reference greedy: recompute every marginal gain each round."""
    cand = sorted(set(int(c) for c in candidates))
    _check_budget(np.asarray(cand), k)
    covered = np.zeros(idx.num_samples, dtype=bool)
    chosen: list[int] = []
    total = 0
    remaining = list(cand)
    for _ in range(k):
        gains = [int(np.count_nonzero(~covered[idx.samples_of(c)])) for c in remaining]
        best = max(range(len(remaining)), key=lambda i: (gains[i], -remaining[i]))
        c = remaining.pop(best)
        chosen.append(c)
        covered[idx.samples_of(c)] = True
        total += gains[best]
    return chosen, total


def log_binom(M: int, k: int) -> float:
    """ln C(M, k) as an exact sum of logs."""
    return math.fsum(math.log((M - k + i) / i) for i in range(1, k + 1))


@dataclass(frozen=True)
class Schedule:
    epsilon: float
    delta: float
    k: int
    size: int
    lambda_: float
    lambda1: float
    n_max: float
    t_max: int
    lambda0: float

    @property
    def base(self) -> int:
        """Samples in the first iteration's half-stream."""
        return math.ceil(self.lambda_)


def schedule_for_size(M: int, k: int, epsilon: float, delta: float) -> Schedule:
    """Sample-size constants for choosing ``k`` of ``M`` items."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not 1 <= k <= M:
        raise ValueError(f"budget k={k} must lie in [1, {M}]")
    c = 2.0 + 2.0 * epsilon / 3.0
    n_max = ((2.0 - 1.0 / E) ** 2 * c * M * (math.log(6.0 / delta) + log_binom(M, k))
             / (k * epsilon ** 2))
    lambda0 = c * math.log(3.0 / delta) / epsilon ** 2
    t_max = max(1, math.ceil(math.log2(2.0 * n_max / lambda0)))
    lam = c * math.log(3.0 * t_max / delta) / epsilon ** 2
    return Schedule(epsilon, delta, k, M, lam, 1.0 + (1.0 + epsilon) * lam, n_max, t_max, lambda0)


def compute_schedule(g: ProbGraph, kind: str, k: int, epsilon: float, delta: float) -> Schedule:
    if kind not in ("edge", "node"):
        raise ValueError(f"kind must be 'edge' or 'node', not {kind!r}")
    return schedule_for_size(g.m if kind == "edge" else g.n, k, epsilon, delta)


def check_components(cov_r: int, cov_r2: int, size_r2: int, sched: Schedule, t: int):
    """``(eps1, eps2, eps3, eps_t)`` of the confidence test; ``None`` below the gate."""
    if cov_r2 < sched.lambda1:
        return None
    eps = sched.epsilon
    scale = 2.0 ** (t - 1) * cov_r2
    e1 = cov_r / cov_r2 - 1.0
    e2 = eps * math.sqrt(size_r2 * (1.0 + eps) / scale)
    e3 = eps * math.sqrt(size_r2 * (1.0 + eps) * (1.0 - 1.0 / E - eps) / ((1.0 + eps / 3.0) * scale))
    et = (e1 + e2 + e1 * e2) * (1.0 - 1.0 / E - eps) + (1.0 - 1.0 / E) * e3
    return e1, e2, e3, et


def check(solution, idx_r: CoverageIndex, idx_r2: CoverageIndex, sched: Schedule, t: int):
    """Confidence test of a greedy solution against an independent sample block.

    Returns ``(passed, eps_t)``; ``eps_t`` is infinite when the independent
    coverage is below ``lambda1``.
    """
    comps = check_components(idx_r.coverage(solution), idx_r2.coverage(solution),
                             len(idx_r2), sched, t)
    if comps is None:
        return False, math.inf
    et = comps[3]
    return et <= sched.epsilon, et
