"""Pure-Python kernels; the reference semantics for ``_ckernels``.

Both modules expose the same functions with the same draw order, so a state
saved by one replays identically in the other.

Draw order of one walk attempt (all detectors):

1. one draw to pick the start node;
2. if the start is a suspect, one acceptance draw (accept -> length-0 walk);
3. per step: one live-edge draw; stop on no edge, on the length cap, on an
   exit from the allowed node set, or on a detected cycle; then, if the new
   node is a suspect, one acceptance draw.
"""
from __future__ import annotations

import bisect

import numpy as np

from .errors import ReplayError

MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_INV = 1.0 / (1 << 53)

EXACT, BRENT, FLOYD, NONE = 0, 1, 2, 3


class Prepared:
    """Graph arrays and suspect probabilities as plain lists."""

    __slots__ = ("off", "src", "eid", "cum", "pr", "n", "m")

    def __init__(self, in_offsets, in_src, in_eid, in_cum, prob):
        if len(prob) != len(in_offsets) - 1:
            raise ValueError("probability vector length differs from node count")
        self.off = np.asarray(in_offsets).tolist()
        self.src = np.asarray(in_src).tolist()
        self.eid = np.asarray(in_eid).tolist()
        self.cum = np.asarray(in_cum).tolist()
        self.pr = np.asarray(prob).tolist()
        self.n = len(self.off) - 1
        self.m = len(self.src)


def prepare(in_offsets, in_src, in_eid, in_cum, prob):
    return Prepared(in_offsets, in_src, in_eid, in_cum, prob)


def _lists(g):
    return g.off, g.src, g.eid, g.cum, g.pr


def fill_u01(state, count):
    s = int(state)
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        out[i] = (((s * _MULT) & MASK64) >> 11) * _INV
    return s, out


def generate(g, state, max_attempts, max_emit, detector, window, len_cap, starts,
             allowed, record=None):
    """Run walk attempts; emit ``(seed, length)`` for every hitting walk.

    Stops after ``max_attempts`` attempts or ``max_emit`` emissions. When
    ``record`` is a list, the node sequence of every emitted walk is appended
    to it (instrumented generation, used to check decoding).
    """
    off, src, eid, cum, pr = _lists(g)
    n = len(off) - 1
    st = starts.tolist() if len(starts) else None
    n_start = len(st) if st is not None else n
    allow = allowed.tolist() if len(allowed) else None
    stamp = [0] * n if detector == EXACT else None
    seeds, lens = [], []
    crossings = 0
    attempts = 0
    s = int(state)

    def draw():
        nonlocal s
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        return (((s * _MULT) & MASK64) >> 11) * _INV

    def step_to(v):
        """Live in-edge draw at v; returns the in-adjacency slot or -1."""
        r = draw()
        lo, hi = off[v], off[v + 1]
        if lo == hi or r >= cum[hi - 1]:
            return -1
        return bisect.bisect_right(cum, r, lo, hi)

    while attempts < max_attempts and len(seeds) < max_emit:
        attempts += 1
        snapshot = s
        i = int(draw() * n_start)
        if i >= n_start:
            i = n_start - 1
        v = st[i] if st is not None else i
        path = [v] if record is not None else None
        if pr[v] > 0.0 and draw() < pr[v]:
            seeds.append(snapshot)
            lens.append(0)
            if record is not None:
                record.append(path)
            continue
        length = 0
        if stamp is not None:
            stamp[v] = attempts
        ring = [v] if window > 0 else None
        anchor, power, lam = v, 1, 0
        slow_v, slow_s = v, s
        while True:
            j = step_to(v)
            if j < 0 or length >= len_cap:
                break
            u = src[j]
            if allow is not None and not allow[u]:
                crossings += 1
                break
            if detector == EXACT:
                if stamp[u] == attempts:
                    break
            else:
                if ring is not None and u in ring:
                    break
                if detector == BRENT:
                    if u == anchor:
                        break
                    lam += 1
                    if lam == power:
                        anchor, power, lam = u, power * 2, 0
                elif detector == FLOYD and (length + 1) % 2 == 0:
                    # slow pointer replays one step of the same draw stream
                    saved = s
                    s = slow_s
                    k = step_to(slow_v)
                    slow_v = src[k]
                    if pr[slow_v] > 0.0:
                        draw()
                    slow_s = s
                    s = saved
                    if u == slow_v:
                        break
            if pr[u] > 0.0 and draw() < pr[u]:
                seeds.append(snapshot)
                lens.append(length + 1)
                if record is not None:
                    path.append(u)
                    record.append(path)
                break
            v = u
            length += 1
            if stamp is not None:
                stamp[v] = attempts
            if ring is not None:
                ring.append(v)
                if len(ring) > window:
                    del ring[0]
            if path is not None:
                path.append(v)
    return (s, attempts, np.array(seeds, dtype=np.uint64),
            np.array(lens, dtype=np.int64), crossings)


def decode(g, seeds, lens, starts):
    """Replay encoded walks with an exact visited set.

    Returns ``(ok, offsets, nodes, edges)``: ``ok[i]`` is 0 for walks that
    revisit a node (dropped from the output), and the node/edge arrays hold
    the surviving walks back to back, indexed by ``offsets``.
    """
    off, src, eid, cum, pr = _lists(g)
    n = len(off) - 1
    st = starts.tolist() if len(starts) else None
    n_start = len(st) if st is not None else n
    ok = np.zeros(len(seeds), dtype=np.uint8)
    offsets = [0]
    nodes, edges = [], []
    for w, (seed, length) in enumerate(zip(seeds.tolist(), lens.tolist())):
        s = int(seed)

        def draw():
            nonlocal s
            s ^= s >> 12
            s ^= (s << 25) & MASK64
            s ^= s >> 27
            return (((s * _MULT) & MASK64) >> 11) * _INV

        i = int(draw() * n_start)
        if i >= n_start:
            i = n_start - 1
        v = st[i] if st is not None else i
        walk_nodes, walk_edges = [v], []
        if pr[v] > 0.0 and draw() < pr[v]:
            if length != 0:
                raise ReplayError(f"walk {w}: accepted at start, recorded length {length}")
            ok[w] = 1
            nodes.append(v)
            offsets.append(len(nodes))
            continue
        visited = {v}
        step = 0
        while True:
            step += 1
            if step > length:
                raise ReplayError(f"walk {w}: no acceptance by recorded length {length}")
            r = draw()
            lo, hi = off[v], off[v + 1]
            if lo == hi or r >= cum[hi - 1]:
                raise ReplayError(f"walk {w}: replay found no live edge at step {step}")
            j = bisect.bisect_right(cum, r, lo, hi)
            u = src[j]
            if u in visited:
                break
            walk_nodes.append(u)
            walk_edges.append(eid[j])
            if pr[u] > 0.0 and draw() < pr[u]:
                if step != length:
                    raise ReplayError(f"walk {w}: accepted at step {step}, recorded {length}")
                ok[w] = 1
                nodes.extend(walk_nodes)
                edges.extend(walk_edges)
                offsets.append(len(nodes))
                break
            visited.add(u)
            v = u
    return (ok, np.array(offsets, dtype=np.int64), np.array(nodes, dtype=np.int64),
            np.array(edges, dtype=np.int64))


def simulate(g, rem_edge, rem_node, state, max_runs, threshold):
    """Paired LT runs on the graph and its residual under common random numbers.

    Per run and per node in id order: a seed draw if the node is a suspect,
    then a live-edge draw. Returns ``(state, runs, sum_infected, sum_diff)``
    where ``sum_diff`` accumulates infected(original) - infected(residual);
    stops once ``sum_diff >= threshold`` or after ``max_runs`` runs.
    """
    off, src, eid, cum, pr = _lists(g)
    n = len(off) - 1
    rem_e = rem_edge.tolist() if len(rem_edge) else None
    rem_n = rem_node.tolist() if len(rem_node) else None
    s = int(state)
    runs = 0
    sum_inf = 0
    sum_diff = 0
    while runs < max_runs and sum_diff < threshold:
        runs += 1
        seed = [False] * n
        parent = [-1] * n
        pedge = [-1] * n
        for v in range(n):
            if pr[v] > 0.0:
                s ^= s >> 12
                s ^= (s << 25) & MASK64
                s ^= s >> 27
                seed[v] = ((((s * _MULT) & MASK64) >> 11) * _INV) < pr[v]
            s ^= s >> 12
            s ^= (s << 25) & MASK64
            s ^= s >> 27
            r = (((s * _MULT) & MASK64) >> 11) * _INV
            lo, hi = off[v], off[v + 1]
            if lo != hi and r < cum[hi - 1]:
                j = bisect.bisect_right(cum, r, lo, hi)
                parent[v] = src[j]
                pedge[v] = eid[j]
        a = _forward_count(parent, seed, None)
        res_parent = list(parent)
        res_seed = list(seed)
        alive = None
        if rem_e is not None:
            for v in range(n):
                if pedge[v] >= 0 and rem_e[pedge[v]]:
                    res_parent[v] = -1
        if rem_n is not None:
            alive = [not x for x in rem_n]
            for v in range(n):
                if rem_n[v]:
                    res_parent[v] = -1
                    res_seed[v] = False
                elif parent[v] >= 0 and rem_n[parent[v]]:
                    res_parent[v] = -1
        b = _forward_count(res_parent, res_seed, alive)
        sum_inf += a
        sum_diff += a - b
    return s, runs, sum_inf, sum_diff


def _forward_count(parent, seed, alive):
    """Nodes reachable from the seeds along live edges (forward BFS)."""
    n = len(parent)
    children = [[] for _ in range(n)]
    for v, u in enumerate(parent):
        if u >= 0:
            children[u].append(v)
    frontier = [v for v in range(n) if seed[v] and (alive is None or alive[v])]
    infected = set(frontier)
    while frontier:
        nxt = []
        for u in frontier:
            for v in children[u]:
                if v not in infected:
                    infected.add(v)
                    nxt.append(v)
        frontier = nxt
    return len(infected)
