"""Bit-exact 64-bit generators backing the (seed, length) walk encoding.

All states and outputs are plain Python ints in ``[0, 2**64)``. The compiled
kernels implement the identical recurrences, so any state saved here replays
the same draws there.
"""
from __future__ import annotations

import bisect

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
XORSHIFT_MULT = 0x2545F4914F6CDD1D
BURN_IN = 8
_INV_2_53 = 1.0 / (1 << 53)


def splitmix_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    z = (state + GOLDEN_GAMMA) & MASK64
    new_state = z
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return new_state, z


def prg_next(state: int) -> tuple[int, int]:
    """One xorshift64* step. ``state`` must be non-zero."""
    x = state
    x ^= x >> 12
    x ^= (x << 25) & MASK64
    x ^= x >> 27
    return x, (x * XORSHIFT_MULT) & MASK64


def u01(output: int) -> float:
    """Map a 64-bit output to a double in ``[0, 1)`` using the top 53 bits."""
    return (output >> 11) * _INV_2_53


def pick_uniform_node(state: int, n: int) -> tuple[int, int]:
    state, out = prg_next(state)
    v = int(u01(out) * n)
    # floor(u * n) can round up to n for u close to 1
    return state, (v if v < n else n - 1)


def pick_live_in_edge(state: int, g, v: int):
    """Draw the live incoming edge of ``v`` under the live-edge LT model.

    Returns ``(new_state, (u, edge_id))`` or ``(new_state, None)`` when no
    edge is live. Always consumes exactly one draw.
    """
    state, out = prg_next(state)
    r = u01(out)
    lo, hi = int(g.in_offsets[v]), int(g.in_offsets[v + 1])
    if lo == hi or r >= g.in_cum[hi - 1]:
        return state, None
    j = bisect.bisect_right(g.in_cum, r, lo, hi)
    return state, (int(g.in_src[j]), int(g.in_eid[j]))


def seed_state(seed: int, stream: int = 0) -> int:
    """Derive a non-zero xorshift state for ``stream`` under a global ``seed``.

    The state is taken from splitmix64 and then burned in for ``BURN_IN``
    draws, as every worker stream is.
    """
    _, a = splitmix_next(seed & MASK64)
    _, s = splitmix_next(a ^ (stream & MASK64))
    if s == 0:
        s = GOLDEN_GAMMA
    for _ in range(BURN_IN):
        s, _ = prg_next(s)
    return s


class Prg:
    """Mutable convenience wrapper over :func:`prg_next` for sequential use."""

    __slots__ = ("state",)

    def __init__(self, state: int):
        if state == 0:
            raise ValueError("xorshift state must be non-zero")
        self.state = state & MASK64

    @classmethod
    def from_seed(cls, seed: int, stream: int = 0) -> "Prg":
        return cls(seed_state(seed, stream))

    def next(self) -> int:
        self.state, out = prg_next(self.state)
        return out

    def random(self) -> float:
        self.state, out = prg_next(self.state)
        return (out >> 11) * _INV_2_53

    def below(self, n: int) -> int:
        v = int(self.random() * n)
        return v if v < n else n - 1
