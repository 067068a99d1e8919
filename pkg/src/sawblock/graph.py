"""Probabilistic directed graphs, suspect sets and candidate sets.

Graphs are stored as compressed in-adjacency (CSR over incoming edges) with
per-node cumulative LT weights, which is what the walk samplers consume.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphFormatError
from .prng import Prg

WEIGHT_TOL = 1e-12
CACHE_MAGIC = b"HSAW1"


@dataclass(frozen=True, eq=False)
class ProbGraph:
    """Directed graph with LT edge weights in compressed in-adjacency form.

    ``in_src[in_offsets[v]:in_offsets[v+1]]`` lists the sources of edges into
    ``v`` sorted ascending, ``in_eid`` the matching edge ids and ``in_cum``
    the running sum of their weights.
    """

    n: int
    m: int
    in_offsets: np.ndarray
    in_src: np.ndarray
    in_eid: np.ndarray
    in_cum: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_weight: np.ndarray
    labels: tuple | None = None
    _edge_lookup: dict = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, src: Sequence[int], dst: Sequence[int],
                   weight: Sequence[float], labels=None) -> "ProbGraph":
        """Build and validate a graph; edge ids follow the input order."""
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        weight = np.asarray(weight, dtype=np.float64).reshape(-1)
        m = len(src)
        if len(dst) != m or len(weight) != m:
            raise GraphFormatError("src, dst and weight lengths differ")
        if n < 1:
            raise GraphFormatError("graph needs at least one node")
        if m and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise GraphFormatError("edge endpoint outside 0..n-1")
        if np.any(src == dst):
            v = int(src[src == dst][0])
            raise GraphFormatError(f"self-loop on node {v}")
        if np.any(~(weight > 0.0) | (weight > 1.0)):
            raise GraphFormatError("edge weight outside (0, 1]")

        order = np.lexsort((src, dst))
        in_src = src[order]
        in_dst = dst[order]
        if m > 1:
            dup = (in_src[1:] == in_src[:-1]) & (in_dst[1:] == in_dst[:-1])
            if dup.any():
                i = int(np.flatnonzero(dup)[0])
                raise GraphFormatError(f"duplicate edge ({in_src[i]}, {in_dst[i]})")
        counts = np.bincount(dst, minlength=n)
        in_offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=in_offsets[1:])
        in_w = weight[order]
        in_cum = np.empty(m, dtype=np.float64)
        for v in np.flatnonzero(counts):
            lo, hi = in_offsets[v], in_offsets[v + 1]
            c = np.cumsum(in_w[lo:hi])
            if c[-1] > 1.0 + WEIGHT_TOL:
                raise GraphFormatError(f"in-weight sum {c[-1]:.12g} > 1 at node {v}")
            if abs(c[-1] - 1.0) <= WEIGHT_TOL:
                c[-1] = 1.0
            in_cum[lo:hi] = c
        g = cls(n=int(n), m=int(m), in_offsets=in_offsets, in_src=in_src,
                in_eid=order.astype(np.int64), in_cum=in_cum, edge_src=src.copy(),
                edge_dst=dst.copy(), edge_weight=weight.copy(),
                labels=tuple(labels) if labels is not None else None)
        for arr in (g.in_offsets, g.in_src, g.in_eid, g.in_cum,
                    g.edge_src, g.edge_dst, g.edge_weight):
            arr.setflags(write=False)
        return g

    def validate(self) -> None:
        """Re-check every structural invariant; raise GraphFormatError on failure."""
        if len(self.in_offsets) != self.n + 1 or self.in_offsets[-1] != self.m:
            raise GraphFormatError("offset array inconsistent with m")
        if sorted(self.in_eid.tolist()) != list(range(self.m)):
            raise GraphFormatError("edge ids are not a permutation of 0..m-1")
        for v in range(self.n):
            lo, hi = self.in_offsets[v], self.in_offsets[v + 1]
            if hi == lo:
                continue
            s = self.in_src[lo:hi]
            if np.any(np.diff(s) <= 0):
                raise GraphFormatError(f"in-adjacency of {v} not strictly sorted")
            eids = self.in_eid[lo:hi]
            if np.any(self.edge_dst[eids] != v) or np.any(self.edge_src[eids] != s):
                raise GraphFormatError(f"edge endpoints disagree at node {v}")
            c = self.in_cum[lo:hi]
            if np.any(np.diff(c) <= 0) or c[0] <= 0 or c[-1] > 1.0 + WEIGHT_TOL:
                raise GraphFormatError(f"cumulative weights invalid at node {v}")

    def in_adj(self, v: int) -> list[tuple[int, int]]:
        lo, hi = self.in_offsets[v], self.in_offsets[v + 1]
        return list(zip(self.in_src[lo:hi].tolist(), self.in_eid[lo:hi].tolist()))

    def in_weight_cum(self, v: int) -> np.ndarray:
        return self.in_cum[self.in_offsets[v]:self.in_offsets[v + 1]]

    def in_weight_sum(self) -> np.ndarray:
        total = np.zeros(self.n)
        nz = np.diff(self.in_offsets) > 0
        total[nz] = self.in_cum[self.in_offsets[1:][nz] - 1]
        return total

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_offsets)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.edge_src, minlength=self.n)

    def edge_id(self, u: int, v: int) -> int:
        if self._edge_lookup is None:
            lookup = {(a, b): i for i, (a, b) in
                      enumerate(zip(self.edge_src.tolist(), self.edge_dst.tolist()))}
            object.__setattr__(self, "_edge_lookup", lookup)
        try:
            return self._edge_lookup[(u, v)]
        except KeyError:
            raise GraphFormatError(f"no edge ({u}, {v})") from None

    def kernel_arrays(self):
        """Contiguous arrays in the layout the sampling kernels expect."""
        return (np.ascontiguousarray(self.in_offsets, dtype=np.int64),
                np.ascontiguousarray(self.in_src, dtype=np.int64),
                np.ascontiguousarray(self.in_eid, dtype=np.int64),
                np.ascontiguousarray(self.in_cum, dtype=np.float64))

    def same_as(self, other: "ProbGraph") -> bool:
        return (self.n == other.n and self.m == other.m
                and np.array_equal(self.edge_src, other.edge_src)
                and np.array_equal(self.edge_dst, other.edge_dst)
                and np.array_equal(self.edge_weight, other.edge_weight))

    def label_of(self, v: int):
        return self.labels[v] if self.labels is not None else v

    def node_of(self, label: str) -> int:
        """Resolve a label from an input file to a dense node id."""
        if self.labels is None:
            try:
                v = int(label)
            except ValueError:
                raise GraphFormatError(f"node id {label!r} is not an integer") from None
        else:
            index = getattr(self, "_label_index", None)
            if index is None:
                index = {lab: i for i, lab in enumerate(self.labels)}
                object.__setattr__(self, "_label_index", index)
            if label not in index:
                raise GraphFormatError(f"unknown node label {label!r}")
            v = index[label]
        if not 0 <= v < self.n:
            raise GraphFormatError(f"unknown node id {v}")
        return v

    # serialization -----------------------------------------------------

    def write_edge_list(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# n={self.n} m={self.m}\n")
            for u, v, w in zip(self.edge_src.tolist(), self.edge_dst.tolist(),
                               self.edge_weight.tolist()):
                fh.write(f"{self.label_of(u)} {self.label_of(v)} {w!r}\n")

    def save_binary(self, path) -> None:
        """Write the binary cache: magic, little-endian u64 n and m, then CSR arrays."""
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<QQ", self.n, self.m))
            fh.write(self.in_offsets.astype("<u8").tobytes())
            fh.write(self.in_src.astype("<u8").tobytes())
            fh.write(self.in_eid.astype("<u8").tobytes())
            fh.write(self.edge_weight[self.in_eid].astype("<f8").tobytes())


def load_binary(path) -> ProbGraph:
    data = Path(path).read_bytes()
    if not data.startswith(CACHE_MAGIC):
        raise GraphFormatError("not an HSAW1 cache file")
    off = len(CACHE_MAGIC)
    if len(data) < off + 16:
        raise GraphFormatError("truncated cache header")
    n, m = struct.unpack_from("<QQ", data, off)
    off += 16
    need = off + 8 * (n + 1) + 24 * m
    if len(data) != need:
        raise GraphFormatError("truncated or oversized cache file")
    in_offsets = np.frombuffer(data, "<u8", n + 1, off).astype(np.int64)
    off += 8 * (n + 1)
    in_src = np.frombuffer(data, "<u8", m, off).astype(np.int64)
    off += 8 * m
    in_eid = np.frombuffer(data, "<u8", m, off).astype(np.int64)
    off += 8 * m
    in_w = np.frombuffer(data, "<f8", m, off)
    dst = np.repeat(np.arange(n, dtype=np.int64), np.diff(in_offsets))
    src = np.empty(m, np.int64)
    w = np.empty(m, np.float64)
    d = np.empty(m, np.int64)
    src[in_eid] = in_src
    d[in_eid] = dst
    w[in_eid] = in_w
    return ProbGraph.from_edges(n, src, d, w)


def is_binary_cache(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(CACHE_MAGIC)) == CACHE_MAGIC


def _parse_edge_lines(lines: Iterable[str], need_weight: bool):
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"line {lineno}: expected 'u v [w]', got {raw.strip()!r}")
        if need_weight and len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: weight required in 'given' mode")
        w = None
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: bad weight {parts[2]!r}") from None
        yield lineno, parts[0], parts[1], w


def load_edge_list(path, weight_mode: str = "given", seed: int = 0, *,
                   symmetrize: bool = False, remap: bool = False) -> ProbGraph:
    """Read a whitespace-separated edge list ``u v [w]`` into a ProbGraph.

    Parameters
    ----------
    weight_mode : {"given", "indegree", "random"}
        ``given`` uses the third column; ``indegree`` sets w(u,v) = 1/d_in(v);
        ``random`` draws uniform raw weights from the seeded generator and
        normalizes every node's in-weights to sum to 1.
    symmetrize : bool
        Add the reverse of every edge (same weight) before weighting.
    remap : bool
        Accept arbitrary node labels and renumber them densely in order of
        first appearance; otherwise labels must be 0-indexed integers.
    """
    if weight_mode not in ("given", "indegree", "random"):
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    with open(path) as fh:
        rows = list(_parse_edge_lines(fh, weight_mode == "given"))
    labels: list[str] = []
    index: dict[str, int] = {}
    src, dst, wts = [], [], []
    for lineno, a, b, w in rows:
        if remap:
            for lab in (a, b):
                if lab not in index:
                    index[lab] = len(labels)
                    labels.append(lab)
            u, v = index[a], index[b]
        else:
            try:
                u, v = int(a), int(b)
            except ValueError:
                raise GraphFormatError(f"line {lineno}: node ids must be integers") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"line {lineno}: negative node id")
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop on {a}")
        if weight_mode == "given" and not 0.0 < w <= 1.0:
            raise GraphFormatError(f"line {lineno}: weight {w} outside (0, 1]")
        src.append(u)
        dst.append(v)
        wts.append(w if w is not None else 1.0)
    n = len(labels) if remap else (max(max(src, default=-1), max(dst, default=-1)) + 1)
    if symmetrize:
        present = set(zip(src, dst))
        for u, v, w in list(zip(src, dst, wts)):
            if (v, u) not in present:
                present.add((v, u))
                src.append(v)
                dst.append(u)
                wts.append(w)
    dst_arr = np.asarray(dst, dtype=np.int64)
    if weight_mode == "indegree":
        indeg = np.bincount(dst_arr, minlength=max(n, 1))
        weights = 1.0 / indeg[dst_arr]
    elif weight_mode == "random":
        weights = random_normalized_weights(dst_arr, max(n, 1), seed)
    else:
        weights = np.asarray(wts, dtype=np.float64)
    return ProbGraph.from_edges(max(n, 1), src, dst, weights,
                                labels=labels if remap else None)


def random_normalized_weights(dst: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Uniform raw weights in (0, 1], divided by each target's raw in-sum."""
    from ._backend import kernels

    _, raw = kernels.fill_u01(Prg.from_seed(seed, 0x5EED).state, len(dst))
    raw = 1.0 - raw
    sums = np.bincount(dst, weights=raw, minlength=n)
    return raw / sums[dst]


def write_mapping(g: ProbGraph, path) -> None:
    """Write ``dense_id label`` lines for a remapped graph."""
    with open(path, "w") as fh:
        for i in range(g.n):
            fh.write(f"{i} {g.label_of(i)}\n")


def synth_graph(n: int, density: float, seed: int) -> ProbGraph:
    """Random simple digraph with ``round(n * density)`` edges and 1/d_in weights."""
    from ._backend import kernels

    if n < 2:
        raise ValueError("synth_graph needs n >= 2")
    if density < 1:
        raise ValueError("density must be >= 1")
    m = int(round(n * density))
    if m > n * (n - 1):
        raise ValueError(f"{m} edges exceed the n(n-1) = {n * (n - 1)} possible")
    state = Prg.from_seed(seed, 0x6A0F).state
    keys = np.empty(0, dtype=np.int64)
    while len(keys) < m:
        want = max(2 * (m - len(keys)), 16)
        state, r = kernels.fill_u01(state, 2 * want)
        u = np.minimum((r[0::2] * n).astype(np.int64), n - 1)
        v = np.minimum((r[1::2] * (n - 1)).astype(np.int64), n - 2)
        v = v + (v >= u)
        cand = np.concatenate([keys, u * n + v])
        _, first = np.unique(cand, return_index=True)
        keys = cand[np.sort(first)][:m]
    src, dst = keys // n, keys % n
    indeg = np.bincount(dst, minlength=n)
    return ProbGraph.from_edges(n, src, dst, 1.0 / indeg[dst])


@dataclass(frozen=True, eq=False)
class SuspectSet:
    """Probabilistic source set: node ids with their probability of being a seed."""

    nodes: np.ndarray
    probs: np.ndarray
    n: int

    def __post_init__(self):
        if len(self.nodes) != len(self.probs):
            raise GraphFormatError("nodes and probs lengths differ")
        if len(self.nodes) and (self.nodes.min() < 0 or self.nodes.max() >= self.n):
            raise GraphFormatError("suspect node id outside the graph")
        if np.any(~(self.probs > 0.0) | (self.probs > 1.0)):
            raise GraphFormatError("suspect probability outside (0, 1]")
        if len(np.unique(self.nodes)) != len(self.nodes):
            raise GraphFormatError("duplicate suspect node")
        dense = np.zeros(self.n, dtype=np.float64)
        dense[self.nodes] = self.probs
        dense.setflags(write=False)
        object.__setattr__(self, "prob_of", dense)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], n: int) -> "SuspectSet":
        pairs = list(pairs)
        nodes = np.array([int(a) for a, _ in pairs], dtype=np.int64)
        probs = np.array([float(b) for _, b in pairs], dtype=np.float64)
        return cls(nodes, probs, n)

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, v):
        return 0 <= v < self.n and self.prob_of[v] > 0

    def lookup(self, v: int) -> float:
        """Probability that ``v`` is a seed (0.0 when not a suspect)."""
        return float(self.prob_of[v])

    def members(self) -> list[tuple[int, float]]:
        return list(zip(self.nodes.tolist(), self.probs.tolist()))


def load_suspects(path, g: ProbGraph) -> SuspectSet:
    pairs = []
    seen = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"line {lineno}: expected 'node prob'")
            v = g.node_of(parts[0])
            try:
                p = float(parts[1])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: bad probability {parts[1]!r}") from None
            if not 0.0 < p <= 1.0:
                raise GraphFormatError(f"line {lineno}: probability {p} outside (0, 1]")
            if v in seen:
                raise GraphFormatError(f"line {lineno}: duplicate suspect {parts[0]}")
            seen.add(v)
            pairs.append((v, p))
    return SuspectSet.from_pairs(pairs, g.n)


def random_suspects(g: ProbGraph, count: int, seed: int) -> SuspectSet:
    """``count`` distinct uniform nodes, each with a probability uniform in (0, 1)."""
    if count < 1 or count > g.n:
        raise ValueError(f"suspect count {count} outside 1..{g.n}")
    rng = Prg.from_seed(seed, 0x5A5A)
    perm = list(range(g.n))
    nodes = []
    for i in range(count):
        j = i + rng.below(g.n - i)
        perm[i], perm[j] = perm[j], perm[i]
        nodes.append(perm[i])
    probs = []
    for _ in range(count):
        p = rng.random()
        while p == 0.0:
            p = rng.random()
        probs.append(p)
    return SuspectSet(np.array(nodes, dtype=np.int64), np.array(probs), g.n)


@dataclass(frozen=True)
class CandidateSet:
    """Removable items: edge ids or node ids, or every item when ``ids`` is None."""

    kind: str
    ids: frozenset | None = None

    def __post_init__(self):
        if self.kind not in ("edge", "node"):
            raise ValueError(f"candidate kind must be 'edge' or 'node', not {self.kind!r}")
        if self.ids is not None and len(self.ids) == 0:
            raise GraphFormatError("candidate set is empty")

    @classmethod
    def all(cls, kind: str) -> "CandidateSet":
        return cls(kind, None)

    def universe(self, g: ProbGraph) -> int:
        return g.m if self.kind == "edge" else g.n

    def id_array(self, g: ProbGraph) -> np.ndarray:
        size = self.universe(g)
        if self.ids is None:
            return np.arange(size, dtype=np.int64)
        arr = np.array(sorted(self.ids), dtype=np.int64)
        if arr[0] < 0 or arr[-1] >= size:
            raise GraphFormatError(f"candidate id outside 0..{size - 1}")
        return arr

    def mask(self, g: ProbGraph) -> np.ndarray:
        m = np.zeros(self.universe(g), dtype=bool)
        m[self.id_array(g)] = True
        return m

    def size(self, g: ProbGraph) -> int:
        return self.universe(g) if self.ids is None else len(self.ids)


def load_candidates(path, g: ProbGraph, kind: str) -> CandidateSet:
    """Edge candidates are ``u v`` lines; node candidates are one label per line."""
    ids = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            if kind == "edge":
                if len(parts) != 2:
                    raise GraphFormatError(f"line {lineno}: expected 'u v'")
                ids.add(g.edge_id(g.node_of(parts[0]), g.node_of(parts[1])))
            else:
                if len(parts) != 1:
                    raise GraphFormatError(f"line {lineno}: expected one node id")
                ids.add(g.node_of(parts[0]))
    return CandidateSet(kind, frozenset(ids))
