"""Partitioned sampling: each part walks inside its own hop-extended node set."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import GraphFormatError, ProbGraph, SuspectSet
from .sampler import DEFAULT_ATTEMPT_CAP, SamplePool, SampleStream

METHODS = ("hash", "labelprop", "file")


@dataclass(frozen=True)
class Partitioning:
    p: int
    assign: np.ndarray
    h: int = 0
    extended: list = field(default=None)

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("extension hops must be non-negative")
        if self.extended is None:
            object.__setattr__(self, "extended", [self.base(i) for i in range(self.p)])

    def base(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assign == i).astype(np.int64)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.p)

    def report(self) -> dict:
        return {"p": self.p, "h": self.h, "base_sizes": self.sizes().tolist(),
                "extended_sizes": [int(len(x)) for x in self.extended]}


def _label_propagation(g: ProbGraph, rounds: int) -> np.ndarray:
    """Synchronous label propagation over the undirected closed neighbourhood."""
    n = g.n
    src = np.concatenate([g.edge_src, g.edge_dst, np.arange(n)])
    dst = np.concatenate([g.edge_dst, g.edge_src, np.arange(n)])
    labels = np.arange(n, dtype=np.int64)
    for _ in range(rounds):
        # count (node, neighbour label) pairs; pick the top count, smaller label on ties
        keys = dst * n + labels[src]
        uniq, counts = np.unique(keys, return_counts=True)
        node = uniq // n
        lab = uniq % n
        order = np.lexsort((lab, -counts, node))
        first = np.concatenate(([True], node[order][1:] != node[order][:-1]))
        new = np.empty(n, dtype=np.int64)
        new[node[order][first]] = lab[order][first]
        if np.array_equal(new, labels):
            break
        labels = new
    return labels


def _undirected_csr(g: ProbGraph):
    a = np.concatenate([g.edge_src, g.edge_dst])
    b = np.concatenate([g.edge_dst, g.edge_src])
    order = np.argsort(a, kind="stable")
    offs = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(a, minlength=g.n), out=offs[1:])
    return offs.tolist(), b[order].tolist()


def _bfs_order(members: np.ndarray, labels: np.ndarray, label: int, offs, nbr) -> list[int]:
    """Community members in BFS order over undirected edges, restarting at the smallest unseen id."""
    seen = set()
    order = []
    for root in members.tolist():
        if root in seen:
            continue
        seen.add(root)
        queue = [root]
        for v in queue:
            order.append(v)
            for u in nbr[offs[v]:offs[v + 1]]:
                if u not in seen and labels[u] == label:
                    seen.add(u)
                    queue.append(u)
    return order


def _pack(g: ProbGraph, labels: np.ndarray, p: int) -> np.ndarray:
    """Fill parts of ``ceil(n/p)`` nodes with communities, largest first.

    A community that overflows a part spills into the next one in BFS order,
    so both pieces stay connected where possible.
    """
    cap = -(-len(labels) // p)
    offs, nbr = _undirected_csr(g)
    groups = [(lab, np.flatnonzero(labels == lab)) for lab in np.unique(labels)]
    groups.sort(key=lambda x: (-len(x[1]), x[1][0]))
    assign = np.empty(len(labels), dtype=np.int64)
    part, fill = 0, 0
    for lab, members in groups:
        for v in _bfs_order(members, labels, lab, offs, nbr):
            assign[v] = part
            fill += 1
            if fill == cap:
                part, fill = part + 1, 0
    return assign


def partition_graph(g: ProbGraph, p: int, method: str = "hash", seed: int = 0,
                    path=None, rounds: int = 10) -> Partitioning:
    """Split the nodes into ``p`` parts.

    ``hash`` assigns ``v mod p``; ``labelprop`` runs ``rounds`` synchronous
    label-propagation rounds and packs the communities into balanced parts;
    ``file`` reads one part id per line in node order.
    """
    if not 1 <= p <= g.n:
        raise ValueError(f"part count {p} outside 1..{g.n}")
    if method == "hash":
        assign = np.arange(g.n, dtype=np.int64) % p
    elif method == "labelprop":
        assign = _pack(g, _label_propagation(g, rounds), p)
    elif method == "file":
        if path is None:
            raise ValueError("file partitioning needs a path")
        assign = read_partition_file(path, g.n, p)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return Partitioning(p, assign)


def read_partition_file(path, n: int, p: int) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("%", 1)[0].strip()
            if not line:
                continue
            try:
                vals.append(int(line))
            except ValueError:
                raise GraphFormatError(f"line {lineno}: bad part id {line!r}") from None
    if len(vals) != n:
        raise GraphFormatError(f"partition file has {len(vals)} entries for {n} nodes")
    assign = np.array(vals, dtype=np.int64)
    if assign.min() < 0 or assign.max() >= p:
        raise GraphFormatError(f"part id outside 0..{p - 1}")
    return assign


def write_partition_file(part: Partitioning, path) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{x}\n" for x in part.assign.tolist())


def extend_partition(g: ProbGraph, part: Partitioning, h: int) -> Partitioning:
    """Grow every part by its ``h``-step in-neighbourhood."""
    if h < 0:
        raise ValueError("extension hops must be non-negative")
    offs, src = np.asarray(g.in_offsets), np.asarray(g.in_src)
    extended = []
    for i in range(part.p):
        member = np.zeros(g.n, dtype=bool)
        frontier = part.base(i)
        member[frontier] = True
        for _ in range(h):
            if len(frontier) == 0:
                break
            lo, hi = offs[frontier], offs[frontier + 1]
            idx = np.concatenate([np.arange(a, b) for a, b in zip(lo, hi)]) if len(lo) else []
            nb = np.unique(src[np.asarray(idx, dtype=np.int64)])
            frontier = nb[~member[nb]]
            member[frontier] = True
        extended.append(np.flatnonzero(member).astype(np.int64))
    return Partitioning(part.p, part.assign, h, extended)


def part_targets(part: Partitioning, total: int) -> list[int]:
    """Per-part sample quotas proportional to base size; the remainder goes to part 0."""
    sizes = part.sizes()
    n = int(sizes.sum())
    targets = [int(total * int(s) // n) for s in sizes]
    targets[0] += total - sum(targets)
    return targets


def distributed_sample(g: ProbGraph, vi: SuspectSet, part: Partitioning, total: int,
                       workers: int = 1, seed: int = 0, detector="brent", window: int = 2,
                       attempt_cap: int = DEFAULT_ATTEMPT_CAP):
    """Sample each part inside its extended set; walks leaving it are aborted.

    Returns ``(pool, crossing_fraction)`` where the pool is merged in
    ``(part, worker, seq)`` order and the fraction is crossings over attempts.
    """
    pools = []
    for i, target in enumerate(part_targets(part, total)):
        starts = part.base(i)
        if len(starts) == 0:
            raise ValueError(f"part {i} is empty")
        allowed = np.zeros(g.n, dtype=np.uint8)
        allowed[part.extended[i]] = 1
        stream = SampleStream(g, vi, workers=workers, seed=seed, detector=detector,
                              window=window, starts=starts, allowed=allowed,
                              attempt_cap=attempt_cap, stream_offset=i * workers)
        pools.append(stream.pool(target))
    return merge_pools(pools), _crossing_fraction(pools)


def _crossing_fraction(pools) -> float:
    attempts = sum(p.attempts for p in pools)
    return sum(p.crossings for p in pools) / attempts if attempts else 0.0


def merge_pools(pools) -> SamplePool:
    offsets, nodes, edges, worker, seq = [np.zeros(1, dtype=np.int64)], [], [], [], []
    base = 0
    for p in pools:
        offsets.append(p.offsets[1:] + base)
        nodes.append(p.nodes)
        edges.append(p.edges)
        worker.append(p.worker)
        seq.append(p.seq)
        base += len(p.nodes)
    return SamplePool(np.concatenate(offsets), np.concatenate(nodes), np.concatenate(edges),
                      np.concatenate(worker), np.concatenate(seq),
                      sum(p.attempts for p in pools), sum(p.crossings for p in pools))
