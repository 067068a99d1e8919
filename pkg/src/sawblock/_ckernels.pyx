# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Mirrors ``_pykernels`` draw for draw."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.stdlib cimport malloc, realloc, free, calloc

from .errors import ReplayError

cnp.import_array()

cdef enum:
    EXACT = 0
    BRENT = 1
    FLOYD = 2
    NONE = 3

cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline double draw(uint64_t* s) noexcept nogil:
    cdef uint64_t x = s[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    s[0] = x
    return <double>((x * <uint64_t>0x2545F4914F6CDD1D) >> 11) * INV53


ctypedef struct Head:
    int64_t id
    int64_t base
    int64_t deg
    double prob
    double total

ctypedef struct Ent:
    double cum
    int64_t next


cdef inline Head* head_at(char* blob, int64_t pos) noexcept nogil:
    return <Head*>(blob + pos)


cdef inline int64_t pick_entry(char* blob, int64_t pos, uint64_t* s) noexcept nogil:
    # one draw; first entry whose cumulative weight exceeds r, or -1
    cdef double r = draw(s)
    cdef Head* h = <Head*>(blob + pos)
    cdef Ent* e = <Ent*>(blob + pos + sizeof(Head))
    cdef int64_t lo = 0, hi = h.deg, mid
    if hi == 0 or r >= h.total:
        return -1
    if hi <= 16:
        while e[lo].cum <= r:
            lo += 1
        return lo
    while lo < hi:
        mid = (lo + hi) >> 1
        if e[mid].cum > r:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline int64_t entry_next(char* blob, int64_t pos, int64_t k) noexcept nogil:
    return (<Ent*>(blob + pos + sizeof(Head)))[k].next


cdef class Prepared:
    """Graph and suspect probabilities packed for pointer-chasing walks.

    Node ``v`` owns one block: a header (id, in-adjacency base, in-degree,
    suspect probability, total in-weight) followed by one entry per in-edge
    holding the cumulative weight and the byte position of the source's block.
    A walk step therefore touches a single block.
    """
    cdef char* blob
    cdef int64_t* pos
    cdef int64_t* src
    cdef int64_t* eid
    cdef readonly int64_t n, m

    def __cinit__(self, const int64_t[::1] in_offsets, const int64_t[::1] in_src,
                  const int64_t[::1] in_eid, const double[::1] in_cum,
                  const double[::1] prob):
        cdef int64_t i, j, lo, hi, p = 0
        cdef Head* h
        cdef Ent* e
        self.n = in_offsets.shape[0] - 1
        self.m = in_src.shape[0]
        if prob.shape[0] != self.n:
            raise ValueError("probability vector length differs from node count")
        self.pos = <int64_t*>malloc((self.n + 1) * sizeof(int64_t))
        self.src = <int64_t*>malloc((self.m + 1) * sizeof(int64_t))
        self.eid = <int64_t*>malloc((self.m + 1) * sizeof(int64_t))
        self.blob = <char*>malloc(self.n * sizeof(Head) + self.m * sizeof(Ent) + 1)
        if not (self.pos and self.src and self.eid and self.blob):
            raise MemoryError()
        for i in range(self.n):
            self.pos[i] = p
            p += sizeof(Head) + (in_offsets[i + 1] - in_offsets[i]) * sizeof(Ent)
        self.pos[self.n] = p
        for i in range(self.n):
            lo, hi = in_offsets[i], in_offsets[i + 1]
            h = head_at(self.blob, self.pos[i])
            h.id = i
            h.base = lo
            h.deg = hi - lo
            h.prob = prob[i]
            h.total = in_cum[hi - 1] if hi > lo else 0.0
            e = <Ent*>(self.blob + self.pos[i] + sizeof(Head))
            for j in range(lo, hi):
                e[j - lo].cum = in_cum[j]
                e[j - lo].next = self.pos[in_src[j]]
        for j in range(self.m):
            self.src[j] = in_src[j]
            self.eid[j] = in_eid[j]

    def __dealloc__(self):
        free(self.blob)
        free(self.pos)
        free(self.src)
        free(self.eid)


def prepare(in_offsets, in_src, in_eid, in_cum, prob):
    return Prepared(in_offsets, in_src, in_eid, in_cum, prob)


cdef inline int64_t pick_start(uint64_t* s, int64_t n_start) noexcept nogil:
    cdef int64_t i = <int64_t>(draw(s) * n_start)
    if i >= n_start:
        i = n_start - 1
    return i


def fill_u01(state, Py_ssize_t count):
    cdef uint64_t s = <uint64_t>state
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(count, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(count):
            o[i] = draw(&s)
    return int(s), out


def generate(Prepared g, state, int64_t max_attempts, int64_t max_emit,
             int detector, int window, int64_t len_cap,
             const int64_t[::1] starts, const uint8_t[::1] allowed, record=None):
    if record is not None:
        raise ValueError("recording is only supported by the pure-Python kernels")
    cdef int64_t n = g.n
    cdef bint use_starts = starts.shape[0] > 0
    cdef bint use_allowed = allowed.shape[0] > 0
    cdef int64_t n_start = starts.shape[0] if use_starts else n
    cdef char* blob = g.blob
    cdef const int64_t* posof = g.pos
    cdef Head* hu
    cdef int64_t vp, up, slow_p
    cdef uint64_t s = <uint64_t>state
    cdef uint64_t snapshot, saved, slow_s
    cdef int64_t attempts = 0, emitted = 0, crossings = 0, cap = 1024
    cdef int64_t v, u, j, k, length, anchor, power, lam, i
    cdef int64_t ring_n = 0, ring_pos = 0
    cdef double pu
    cdef bint stop
    cdef int64_t* stamp = NULL
    cdef int64_t* ring = NULL
    cdef uint64_t* seeds = <uint64_t*>malloc(cap * sizeof(uint64_t))
    cdef int64_t* lens = <int64_t*>malloc(cap * sizeof(int64_t))
    cdef void* grown
    cdef bint oom = False
    if detector == EXACT:
        stamp = <int64_t*>calloc(n, sizeof(int64_t))
    if window > 0:
        ring = <int64_t*>malloc(window * sizeof(int64_t))
    if seeds == NULL or lens == NULL or (detector == EXACT and stamp == NULL) \
            or (window > 0 and ring == NULL):
        free(seeds); free(lens); free(stamp); free(ring)
        raise MemoryError()
    with nogil:
        while attempts < max_attempts and emitted < max_emit:
            if emitted == cap:
                cap *= 2
                grown = realloc(seeds, cap * sizeof(uint64_t))
                if grown == NULL:
                    oom = True
                    break
                seeds = <uint64_t*>grown
                grown = realloc(lens, cap * sizeof(int64_t))
                if grown == NULL:
                    oom = True
                    break
                lens = <int64_t*>grown
            attempts += 1
            snapshot = s
            i = pick_start(&s, n_start)
            v = starts[i] if use_starts else i
            vp = posof[v]
            pu = head_at(blob, vp).prob
            if pu > 0.0 and draw(&s) < pu:
                seeds[emitted] = snapshot
                lens[emitted] = 0
                emitted += 1
                continue
            length = 0
            if stamp != NULL:
                stamp[v] = attempts
            if ring != NULL:
                ring[0] = v
                ring_n = 1
                ring_pos = 1 % window
            anchor = v
            power = 1
            lam = 0
            slow_p = vp
            slow_s = s
            while True:
                j = pick_entry(blob, vp, &s)
                if j < 0 or length >= len_cap:
                    break
                up = entry_next(blob, vp, j)
                hu = head_at(blob, up)
                u = hu.id
                if use_allowed and not allowed[u]:
                    crossings += 1
                    break
                if detector == EXACT:
                    if stamp[u] == attempts:
                        break
                else:
                    stop = False
                    for k in range(ring_n):
                        if ring[k] == u:
                            stop = True
                            break
                    if stop:
                        break
                    if detector == BRENT:
                        if u == anchor:
                            break
                        lam += 1
                        if lam == power:
                            anchor = u
                            power *= 2
                            lam = 0
                    elif detector == FLOYD and (length + 1) % 2 == 0:
                        # slow pointer replays one step of the same draw stream
                        saved = s
                        s = slow_s
                        k = pick_entry(blob, slow_p, &s)
                        slow_p = entry_next(blob, slow_p, k)
                        if head_at(blob, slow_p).prob > 0.0:
                            draw(&s)
                        slow_s = s
                        s = saved
                        if up == slow_p:
                            break
                pu = hu.prob
                if pu > 0.0 and draw(&s) < pu:
                    seeds[emitted] = snapshot
                    lens[emitted] = length + 1
                    emitted += 1
                    break
                v = u
                vp = up
                length += 1
                if stamp != NULL:
                    stamp[v] = attempts
                if ring != NULL:
                    ring[ring_pos] = v
                    ring_pos = (ring_pos + 1) % window
                    if ring_n < window:
                        ring_n += 1
    if oom:
        free(seeds); free(lens); free(stamp); free(ring)
        raise MemoryError()
    out_seeds = np.empty(emitted, dtype=np.uint64)
    out_lens = np.empty(emitted, dtype=np.int64)
    cdef uint64_t[::1] os = out_seeds
    cdef int64_t[::1] ol = out_lens
    for i in range(emitted):
        os[i] = seeds[i]
        ol[i] = lens[i]
    free(seeds); free(lens); free(stamp); free(ring)
    return int(s), attempts, out_seeds, out_lens, crossings


def decode(Prepared g, const uint64_t[::1] seeds, const int64_t[::1] lens,
           const int64_t[::1] starts):
    cdef int64_t n = g.n
    cdef Py_ssize_t count = seeds.shape[0]
    cdef bint use_starts = starts.shape[0] > 0
    cdef int64_t n_start = starts.shape[0] if use_starts else n
    cdef char* blob = g.blob
    cdef const int64_t* posof = g.pos
    cdef const int64_t* eid = g.eid
    cdef Head* hv
    cdef Head* hu
    cdef int64_t vp, up
    cdef int64_t total = 0
    cdef Py_ssize_t w
    for w in range(count):
        total += lens[w] + 1
    ok_arr = np.zeros(count, dtype=np.uint8)
    offsets_arr = np.zeros(count + 1, dtype=np.int64)
    nodes_arr = np.empty(total, dtype=np.int64)
    edges_arr = np.empty(total, dtype=np.int64)
    cdef uint8_t[::1] ok = ok_arr
    cdef int64_t[::1] offsets = offsets_arr
    cdef int64_t[::1] nodes = nodes_arr
    cdef int64_t[::1] edges = edges_arr
    cdef int64_t* stamp = <int64_t*>calloc(n, sizeof(int64_t))
    if stamp == NULL:
        raise MemoryError()
    cdef uint64_t s
    cdef int64_t v, u, j, i, step, length, pos_n = 0, pos_e = 0, base_n, base_e, n_out = 0
    cdef int64_t bad = -1, bad_kind = 0
    cdef double pu
    with nogil:
        for w in range(count):
            s = seeds[w]
            length = lens[w]
            base_n = pos_n
            base_e = pos_e
            i = pick_start(&s, n_start)
            v = starts[i] if use_starts else i
            nodes[pos_n] = v
            pos_n += 1
            vp = posof[v]
            hv = head_at(blob, vp)
            pu = hv.prob
            if pu > 0.0 and draw(&s) < pu:
                if length != 0:
                    bad = w
                    bad_kind = 1
                    break
                ok[w] = 1
                n_out += 1
                offsets[n_out] = pos_n
                continue
            stamp[v] = w + 1
            step = 0
            while True:
                step += 1
                if step > length:
                    bad = w
                    bad_kind = 2
                    break
                j = pick_entry(blob, vp, &s)
                if j < 0:
                    bad = w
                    bad_kind = 3
                    break
                up = entry_next(blob, vp, j)
                hu = head_at(blob, up)
                u = hu.id
                if stamp[u] == w + 1:
                    pos_n = base_n
                    pos_e = base_e
                    break
                nodes[pos_n] = u
                pos_n += 1
                edges[pos_e] = eid[hv.base + j]
                pos_e += 1
                pu = hu.prob
                if pu > 0.0 and draw(&s) < pu:
                    if step != length:
                        bad = w
                        bad_kind = 4
                        break
                    ok[w] = 1
                    n_out += 1
                    offsets[n_out] = pos_n
                    break
                stamp[u] = w + 1
                v = u
                vp = up
                hv = hu
            if bad >= 0:
                break
    free(stamp)
    if bad >= 0:
        reasons = {1: "accepted at start", 2: "no acceptance by recorded length",
                   3: "replay found no live edge", 4: "accepted before recorded length"}
        raise ReplayError(f"walk {bad}: {reasons[bad_kind]} (recorded length {lens[bad]})")
    return (ok_arr, offsets_arr[:n_out + 1].copy(), nodes_arr[:pos_n].copy(),
            edges_arr[:pos_e].copy())


def simulate(Prepared g, const uint8_t[::1] rem_edge, const uint8_t[::1] rem_node,
             state, int64_t max_runs, int64_t threshold):
    cdef int64_t n = g.n
    cdef char* blob = g.blob
    cdef const int64_t* posof = g.pos
    cdef const int64_t* src = g.src
    cdef const int64_t* eid = g.eid
    cdef Head* hv
    cdef bint use_e = rem_edge.shape[0] > 0
    cdef bint use_n = rem_node.shape[0] > 0
    cdef const uint8_t* removed = &rem_node[0] if use_n else NULL
    cdef uint64_t s = <uint64_t>state
    cdef int64_t runs = 0, sum_inf = 0, sum_diff = 0, a, b, v, j
    cdef double pv
    cdef uint8_t* seed = <uint8_t*>malloc(n)
    cdef int64_t* parent = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* rparent = <int64_t*>malloc(n * sizeof(int64_t))
    cdef uint8_t* rseed = <uint8_t*>malloc(n)
    cdef uint8_t* memo = <uint8_t*>malloc(n)
    cdef int64_t* stack = <int64_t*>malloc(n * sizeof(int64_t))
    if not (seed and parent and rparent and rseed and memo and stack):
        free(seed); free(parent); free(rparent); free(rseed); free(memo); free(stack)
        raise MemoryError()
    with nogil:
        while runs < max_runs and sum_diff < threshold:
            runs += 1
            for v in range(n):
                seed[v] = 0
                hv = head_at(blob, posof[v])
                pv = hv.prob
                if pv > 0.0:
                    seed[v] = draw(&s) < pv
                j = pick_entry(blob, posof[v], &s)
                if j < 0:
                    parent[v] = -1
                    rparent[v] = -1
                else:
                    j += hv.base
                    parent[v] = src[j]
                    rparent[v] = -1 if (use_e and rem_edge[eid[j]]) else src[j]
                rseed[v] = seed[v]
            if use_n:
                for v in range(n):
                    if removed[v]:
                        rparent[v] = -1
                        rseed[v] = 0
                    elif rparent[v] >= 0 and removed[rparent[v]]:
                        rparent[v] = -1
            a = trace_count(n, parent, seed, NULL, memo, stack)
            b = trace_count(n, rparent, rseed, removed, memo, stack)
            sum_inf += a
            sum_diff += a - b
    free(seed); free(parent); free(rparent); free(rseed); free(memo); free(stack)
    return int(s), runs, sum_inf, sum_diff


cdef int64_t trace_count(int64_t n, const int64_t* parent, const uint8_t* seed,
                         const uint8_t* removed, uint8_t* memo,
                         int64_t* stack) noexcept nogil:
    # memo: 0 unknown, 1 infected, 2 clean, 3 on the current trace
    cdef int64_t v, x, top, count = 0
    cdef uint8_t res
    for v in range(n):
        memo[v] = 0
    for v in range(n):
        if memo[v] == 0:
            top = 0
            x = v
            while True:
                if memo[x] == 1 or memo[x] == 2:
                    res = memo[x]
                    break
                if memo[x] == 3:
                    res = 2
                    break
                if seed[x]:
                    memo[x] = 1
                    res = 1
                    break
                memo[x] = 3
                stack[top] = x
                top += 1
                if parent[x] < 0:
                    res = 2
                    break
                x = parent[x]
            while top > 0:
                top -= 1
                memo[stack[top]] = res
        if memo[v] == 1 and (removed == NULL or not removed[v]):
            count += 1
    return count
