"""Hitting self-avoiding walk sampling.

Walks run backwards along live in-edges from a uniformly chosen start node and
end when they reach a suspect that turns out to be an actual seed. Each
emitted walk is stored only as ``(seed, length)``: the generator state before
its first draw plus the number of edges it crossed. Replaying the state
reconstructs the walk exactly.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator, Optional

import numpy as np

from ._backend import kernels, python_kernels
from .errors import SamplingExhausted
from .graph import ProbGraph, SuspectSet
from .prng import pick_live_in_edge, pick_uniform_node, prg_next, seed_state, u01

DETECTORS = {"exact": 0, "brent": 1, "floyd": 2, "none": 3}
DEFAULT_BATCH = 10
DEFAULT_ATTEMPT_CAP = 10**8
_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_U8 = np.empty(0, dtype=np.uint8)


@dataclass(frozen=True)
class EncodedWalk:
    seed: int
    len: int
    worker_id: int = 0
    seq: int = 0


@dataclass(frozen=True)
class HsawSample:
    nodes: tuple
    edge_ids: tuple

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def hit(self) -> int:
        return self.nodes[-1]


def _detector_code(detector) -> int:
    if isinstance(detector, int):
        if detector not in DETECTORS.values():
            raise ValueError(f"unknown detector code {detector}")
        return detector
    try:
        return DETECTORS[detector]
    except KeyError:
        raise ValueError(f"unknown detector {detector!r}; choose from {sorted(DETECTORS)}") from None


def sample_hsaw_naive(g: ProbGraph, vi: SuspectSet, state: int,
                      max_attempts: int = DEFAULT_ATTEMPT_CAP):
    """Rejection-sample one walk with an exact visited set.

    Returns ``(state, sample, attempts_used)``. Raises
    :class:`SamplingExhausted` when ``max_attempts`` attempts all fail.
    """
    prob = vi.prob_of
    for attempt in range(1, max_attempts + 1):
        state, v = pick_uniform_node(state, g.n)
        if prob[v] > 0.0:
            state, out = prg_next(state)
            if u01(out) < prob[v]:
                return state, HsawSample((v,), ()), attempt
        nodes, edges, seen = [v], [], {v}
        while True:
            state, pick = pick_live_in_edge(state, g, v)
            if pick is None:
                break
            u, e = pick
            if u in seen:
                break
            nodes.append(u)
            edges.append(e)
            if prob[u] > 0.0:
                state, out = prg_next(state)
                if u01(out) < prob[u]:
                    return state, HsawSample(tuple(nodes), tuple(edges)), attempt
            seen.add(u)
            v = u
    raise SamplingExhausted(f"no hitting walk in {max_attempts} attempts")


def prepare(g: ProbGraph, vi: SuspectSet, backend=None):
    """Kernel-ready packing of the graph and suspect probabilities."""
    return (backend or kernels).prepare(*g.kernel_arrays(), vi.prob_of)


def _generate(g, vi, state, max_attempts, max_emit, detector, window,
              starts=_EMPTY_I64, allowed=_EMPTY_U8, backend=None):
    k = backend or kernels
    return k.generate(prepare(g, vi, k), state, max_attempts, max_emit,
                      _detector_code(detector), window, g.n, starts, allowed)


def thread_sample(g: ProbGraph, vi: SuspectSet, worker_id: int, l: int = DEFAULT_BATCH,
                  seed: int = 0, detector="brent", window: int = 2) -> list[EncodedWalk]:
    """Run ``l`` walk attempts on worker ``worker_id``'s stream; return the hits."""
    if l < 1:
        raise ValueError("batch size must be at least 1")
    state = seed_state(seed, worker_id)
    _, _, seeds, lens, _ = _generate(g, vi, state, l, l, detector, window)
    return [EncodedWalk(int(s), int(n), worker_id, i)
            for i, (s, n) in enumerate(zip(seeds.tolist(), lens.tolist()))]


def decode_walk(g: ProbGraph, vi: SuspectSet, ew: EncodedWalk,
                starts=_EMPTY_I64) -> Optional[HsawSample]:
    """Rebuild the walk behind ``ew``; ``None`` if the replay revisits a node.

    Raises :class:`~sawblock.errors.ReplayError` when the replay does not end
    by acceptance exactly at ``ew.len``.
    """
    ok, offsets, nodes, edges = kernels.decode(
        prepare(g, vi), np.array([ew.seed], dtype=np.uint64),
        np.array([ew.len], dtype=np.int64), starts)
    if not ok[0]:
        return None
    return HsawSample(tuple(nodes.tolist()), tuple(edges.tolist()))


def record_walks(g: ProbGraph, vi: SuspectSet, state: int, attempts: int,
                 detector="brent", window: int = 2, max_emit: Optional[int] = None):
    """Instrumented generation: encoded walks plus the node sequence each one took.

    Runs at most ``attempts`` attempts and stops early after ``max_emit``
    walks. Always uses the pure-Python kernel, the only one that records.
    """
    record: list = []
    _, _, seeds, lens, _ = python_kernels.generate(
        prepare(g, vi, python_kernels), state, attempts,
        attempts if max_emit is None else max_emit,
        _detector_code(detector), window, g.n, _EMPTY_I64, _EMPTY_U8, record)
    return [EncodedWalk(int(s), int(n), 0, i)
            for i, (s, n) in enumerate(zip(seeds.tolist(), lens.tolist()))], record


def detect_cycle_floyd(step: Callable[[Hashable], Optional[Hashable]], x0: Hashable) -> bool:
    """True iff iterating ``step`` from ``x0`` repeats a value before returning ``None``."""
    slow = fast = x0
    while True:
        for _ in range(2):
            fast = step(fast)
            if fast is None:
                return False
        slow = step(slow)
        if slow == fast:
            return True


def detect_cycle_brent(step: Callable[[Hashable], Optional[Hashable]], x0: Hashable) -> bool:
    """Brent's variant: one pointer plus an anchor saved at powers of two."""
    anchor, power, lam = x0, 1, 0
    x = x0
    while True:
        x = step(x)
        if x is None:
            return False
        if x == anchor:
            return True
        lam += 1
        if lam == power:
            anchor, power, lam = x, power * 2, 0


class SamplePool:
    """Decoded walks stored as flat arrays, ordered by ``(worker_id, seq)``."""

    def __init__(self, offsets, nodes, edges, worker, seq, attempts: int, crossings: int = 0):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.nodes = np.asarray(nodes, dtype=np.int64)
        self.edges = np.asarray(edges, dtype=np.int64)
        self.worker = np.asarray(worker, dtype=np.int64)
        self.seq = np.asarray(seq, dtype=np.int64)
        self.attempts = int(attempts)
        self.crossings = int(crossings)
        # walk i owns edges [edge_offsets[i], edge_offsets[i+1])
        self.edge_offsets = self.offsets - np.arange(len(self.offsets), dtype=np.int64)

    @property
    def accepted(self) -> int:
        return len(self.offsets) - 1

    def __len__(self) -> int:
        return self.accepted

    def walk_nodes(self, i: int) -> np.ndarray:
        return self.nodes[self.offsets[i]:self.offsets[i + 1]]

    def walk_edges(self, i: int) -> np.ndarray:
        return self.edges[self.edge_offsets[i]:self.edge_offsets[i + 1]]

    def __getitem__(self, i: int) -> HsawSample:
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return HsawSample(tuple(self.walk_nodes(i).tolist()), tuple(self.walk_edges(i).tolist()))

    def __iter__(self) -> Iterator[HsawSample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def samples(self) -> list[HsawSample]:
        return list(self)

    def item_csr(self, kind: str, start: int = 0, stop: Optional[int] = None):
        """``(offsets, items)`` of the walks in ``[start, stop)`` for ``kind`` edge or node."""
        stop = len(self) if stop is None else stop
        offs = self.edge_offsets if kind == "edge" else self.offsets
        flat = self.edges if kind == "edge" else self.nodes
        lo, hi = offs[start], offs[stop]
        return offs[start:stop + 1] - lo, flat[lo:hi]

    def dump(self, fh) -> None:
        """Write one line per walk: ``worker seq len v1 ... vl``."""
        for i in range(len(self)):
            nodes = self.walk_nodes(i)
            fh.write(f"{self.worker[i]} {self.seq[i]} {len(nodes) - 1} "
                     + " ".join(map(str, nodes.tolist())) + "\n")


class _Worker:
    __slots__ = ("state", "attempts", "crossings", "offsets", "nodes", "edges",
                 "seeds", "lens", "count", "lock")

    def __init__(self, state: int):
        self.state = state
        self.attempts = 0
        self.crossings = 0
        self.offsets: list = []
        self.nodes: list = []
        self.edges: list = []
        self.seeds: list = []
        self.lens: list = []
        self.count = 0
        self.lock = threading.Lock()


class SampleStream:
    """A growing, deterministic stream of decoded walks from ``workers`` streams.

    Worker ``w`` draws from its own generator seeded by ``(seed, w)``. A
    request for ``total`` walks gives worker ``w`` a quota of
    ``total // workers`` (plus one for the first ``total % workers`` workers),
    so the pool for a given ``(seed, workers, total)`` never depends on
    thread timing.
    """

    def __init__(self, g: ProbGraph, vi: SuspectSet, workers: int = 1, seed: int = 0,
                 detector="brent", window: int = 2, starts=None, allowed=None,
                 attempt_cap: int = DEFAULT_ATTEMPT_CAP, chunk_attempts: int = 1 << 16,
                 stream_offset: int = 0):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.g, self.vi = g, vi
        self.workers = workers
        self.detector = _detector_code(detector)
        self.window = window
        self.starts = _EMPTY_I64 if starts is None else np.ascontiguousarray(starts, dtype=np.int64)
        self.allowed = _EMPTY_U8 if allowed is None else np.ascontiguousarray(allowed, dtype=np.uint8)
        self.attempt_cap = attempt_cap
        self.chunk_attempts = chunk_attempts
        self._prep = prepare(g, vi)
        self._w = [_Worker(seed_state(seed, stream_offset + w)) for w in range(workers)]

    def quotas(self, total: int) -> list[int]:
        q, r = divmod(total, self.workers)
        return [q + (1 if w < r else 0) for w in range(self.workers)]

    @property
    def attempts(self) -> int:
        return sum(w.attempts for w in self._w)

    @property
    def accepted(self) -> int:
        return sum(w.count for w in self._w)

    @property
    def crossings(self) -> int:
        return sum(w.crossings for w in self._w)

    def _fill(self, wid: int, quota: int) -> None:
        wk = self._w[wid]
        with wk.lock:
            while wk.count < quota:
                if wk.attempts >= self.attempt_cap:
                    raise SamplingExhausted(
                        f"worker {wid}: {wk.attempts} attempts yielded {wk.count} of {quota} walks")
                budget = min(self.chunk_attempts, self.attempt_cap - wk.attempts)
                state, att, seeds, lens, cross = kernels.generate(
                    self._prep, wk.state, budget, quota - wk.count,
                    self.detector, self.window, self.g.n, self.starts, self.allowed)
                wk.state = state
                wk.attempts += att
                wk.crossings += cross
                if len(seeds) == 0:
                    continue
                ok, offs, nodes, edges = kernels.decode(self._prep, seeds, lens, self.starts)
                keep = ok.astype(bool)
                wk.seeds.append(seeds[keep])
                wk.lens.append(lens[keep])
                wk.offsets.append(offs)
                wk.nodes.append(nodes)
                wk.edges.append(edges)
                wk.count += int(keep.sum())

    def ensure(self, total: int) -> None:
        """Grow every worker's stream to its quota for ``total`` walks."""
        quotas = self.quotas(total)
        if self.workers == 1:
            self._fill(0, quotas[0])
            return
        with ThreadPoolExecutor(max_workers=self.workers) as ex:
            for f in [ex.submit(self._fill, w, q) for w, q in enumerate(quotas)]:
                f.result()

    def _flat(self, wk: _Worker, quota: int):
        offsets, nodes, edges = [np.zeros(1, dtype=np.int64)], [], []
        base = 0
        for offs, nd, ed in zip(wk.offsets, wk.nodes, wk.edges):
            offsets.append(offs[1:] + base)
            nodes.append(nd)
            edges.append(ed)
            base += len(nd)
        offs = np.concatenate(offsets)[:quota + 1]
        nd = np.concatenate(nodes)[:offs[-1]] if nodes else _EMPTY_I64
        n_edges = offs[-1] - quota
        ed = np.concatenate(edges)[:n_edges] if edges else _EMPTY_I64
        return offs, nd, ed

    def pool(self, total: int) -> SamplePool:
        """The first ``total`` walks (per-worker quotas), generating more as needed."""
        self.ensure(total)
        offsets, nodes, edges, worker, seq = [np.zeros(1, dtype=np.int64)], [], [], [], []
        base = 0
        for w, (wk, q) in enumerate(zip(self._w, self.quotas(total))):
            offs, nd, ed = self._flat(wk, q)
            offsets.append(offs[1:] + base)
            nodes.append(nd)
            edges.append(ed)
            worker.append(np.full(q, w, dtype=np.int64))
            seq.append(np.arange(q, dtype=np.int64))
            base += len(nd)
        return SamplePool(np.concatenate(offsets), np.concatenate(nodes), np.concatenate(edges),
                          np.concatenate(worker), np.concatenate(seq), self.attempts, self.crossings)

    def encoded(self, total: Optional[int] = None) -> list[EncodedWalk]:
        """Encoded form of the kept walks, in ``(worker_id, seq)`` order."""
        quotas = self.quotas(total) if total is not None else [wk.count for wk in self._w]
        out = []
        for w, (wk, q) in enumerate(zip(self._w, quotas)):
            seeds = np.concatenate(wk.seeds).tolist() if wk.seeds else []
            lens = np.concatenate(wk.lens).tolist() if wk.lens else []
            out.extend(EncodedWalk(int(s), int(n), w, i)
                       for i, (s, n) in enumerate(zip(seeds[:q], lens[:q])))
        return out


def stream_samples(g: ProbGraph, vi: SuspectSet, workers: int = 1, until: int = 1000,
                   seed: int = 0, **kwargs) -> SamplePool:
    """Collect ``until`` decoded walks from ``workers`` parallel streams."""
    return SampleStream(g, vi, workers=workers, seed=seed, **kwargs).pool(until)


def estimate_influence(pool_or_counts, n: int) -> float:
    """``n * accepted / attempts``: expected infected-node count under the suspects."""
    if isinstance(pool_or_counts, tuple):
        accepted, attempts = pool_or_counts
    else:
        accepted, attempts = pool_or_counts.accepted, pool_or_counts.attempts
    if attempts <= 0:
        raise ValueError("influence estimate needs at least one attempt")
    return n * accepted / attempts


def reverse_reachable_walk(g: ProbGraph, state: int):
    """One live-edge reverse walk with no hitting requirement.

    Stops at no live edge or on the first revisit. Returns ``(state, nodes)``.
    """
    state, v = pick_uniform_node(state, g.n)
    nodes, seen = [v], {v}
    while True:
        state, pick = pick_live_in_edge(state, g, v)
        if pick is None or pick[0] in seen:
            return state, nodes
        v = pick[0]
        nodes.append(v)
        seen.add(v)


def walk_probability(g: ProbGraph, vi: SuspectSet, nodes) -> float:
    """Closed-form probability of drawing the hitting walk ``nodes`` from a fixed start."""
    p = vi.lookup(nodes[-1])
    for u in nodes[:-1]:
        p *= 1.0 - vi.lookup(u)
    for a, b in zip(nodes, nodes[1:]):
        e = g.edge_id(b, a)
        p *= float(g.edge_weight[e])
    return p


def enumerate_hsaws(g: ProbGraph, vi: SuspectSet, start: Optional[int] = None):
    """All hitting self-avoiding walks with positive probability, with their probabilities.

    Yields ``(nodes, prob)``; ``prob`` is conditional on the start node.
    Exponential in the graph size: meant for tiny test graphs.
    """
    starts = range(g.n) if start is None else [start]
    for s in starts:
        stack = [((s,), 1.0)]
        while stack:
            nodes, p = stack.pop()
            v = nodes[-1]
            pv = vi.lookup(v)
            if pv > 0.0:
                yield nodes, p * pv
                p *= 1.0 - pv
                if p == 0.0:
                    continue
            for u, e in g.in_adj(v):
                if u not in nodes:
                    stack.append((nodes + (u,), p * float(g.edge_weight[e])))


def total_hit_mass(g: ProbGraph, vi: SuspectSet) -> float:
    """Probability that one attempt succeeds; ``n`` times this is the influence."""
    return math.fsum(p for _, p in enumerate_hsaws(g, vi)) / g.n
