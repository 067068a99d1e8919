"""Edge and node spread interdiction by sample doubling and confidence checks."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .coverage import CoverageIndex, check, compute_schedule, greedy_max_cover
from .graph import CandidateSet, ProbGraph, SuspectSet
from .sampler import SampleStream, estimate_influence


@dataclass
class InterdictionResult:
    kind: str
    k: int
    epsilon: float
    delta: float
    solution: list
    est_suspension: float
    coverage: int
    samples_used: int
    attempts: int
    iterations: int
    passed_check: bool
    wall_time_s: float
    trace: list = field(default_factory=list)

    def to_json(self, include_trace: bool = False) -> dict:
        d = asdict(self)
        if not include_trace:
            d.pop("trace")
        return d


def _interdict(kind, g: ProbGraph, vi: SuspectSet, c: CandidateSet, k: int, epsilon: float,
               delta: float, workers: int, seed: int, stream: SampleStream | None,
               detector, window) -> InterdictionResult:
    t0 = time.perf_counter()
    if c.kind != kind:
        raise ValueError(f"{kind} interdiction needs {kind} candidates, got {c.kind}")
    cand = c.id_array(g)
    if not 1 <= k <= len(cand):
        raise ValueError(f"budget k={k} must lie in [1, {len(cand)}]")
    sched = compute_schedule(g, kind, k, epsilon, delta)
    if stream is None:
        stream = SampleStream(g, vi, workers=workers, seed=seed, detector=detector, window=window)
    universe = g.m if kind == "edge" else g.n
    mask = c.mask(g)
    size = sched.base
    t = 0
    trace = []
    while True:
        t += 1
        pool = stream.pool(2 * size)
        idx_r = CoverageIndex.from_pool(pool, kind, universe, mask, 0, size)
        idx_r2 = CoverageIndex.from_pool(pool, kind, universe, mask, size, 2 * size)
        solution, cov = greedy_max_cover(idx_r, cand, k)
        passed, eps_t = check(solution, idx_r, idx_r2, sched, t)
        trace.append({"t": t, "samples": size, "coverage": cov,
                      "eps_t": eps_t if math.isfinite(eps_t) else None, "passed": passed})
        if passed or size >= sched.n_max:
            break
        size *= 2
    influence = estimate_influence((stream.accepted, stream.attempts), g.n)
    return InterdictionResult(
        kind=kind, k=k, epsilon=epsilon, delta=delta, solution=[int(x) for x in solution],
        est_suspension=influence * cov / size, coverage=int(cov), samples_used=2 * size,
        attempts=stream.attempts, iterations=t, passed_check=bool(passed),
        wall_time_s=time.perf_counter() - t0, trace=trace)


def esia(g: ProbGraph, vi: SuspectSet, c: CandidateSet | None, k: int, epsilon: float = 0.1,
         delta: float = 0.1, workers: int = 1, seed: int = 0, *, stream=None,
         detector="brent", window: int = 2) -> InterdictionResult:
    """Choose ``k`` candidate edges whose removal most reduces the expected spread."""
    return _interdict("edge", g, vi, c or CandidateSet.all("edge"), k, epsilon, delta,
                      workers, seed, stream, detector, window)


def nsia(g: ProbGraph, vi: SuspectSet, c: CandidateSet | None, k: int, epsilon: float = 0.1,
         delta: float = 0.1, workers: int = 1, seed: int = 0, *, stream=None,
         detector="brent", window: int = 2) -> InterdictionResult:
    """Choose ``k`` candidate nodes whose removal most reduces the expected spread."""
    return _interdict("node", g, vi, c or CandidateSet.all("node"), k, epsilon, delta,
                      workers, seed, stream, detector, window)


def interdict(kind: str, *args, **kwargs) -> InterdictionResult:
    if kind == "edge":
        return esia(*args, **kwargs)
    if kind == "node":
        return nsia(*args, **kwargs)
    raise ValueError(f"kind must be 'edge' or 'node', not {kind!r}")
