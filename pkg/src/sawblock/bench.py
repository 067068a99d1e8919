"""Timing helpers shared by the ``bench`` command and the benchmark script."""
from __future__ import annotations

import time

import numpy as np

from .prng import seed_state
from .sampler import SampleStream, _detector_code, prepare

_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_U8 = np.empty(0, dtype=np.uint8)


def time_generate(module, g, vi, attempts: int, detector="brent", window: int = 2,
                  seed: int = 0) -> float:
    """Walk attempts per second of one kernel module on a single stream."""
    prep = prepare(g, vi, module)
    state = seed_state(seed, 0)
    t0 = time.perf_counter()
    _, done, _, _, _ = module.generate(prep, state, attempts, attempts,
                                       _detector_code(detector), window, g.n,
                                       _EMPTY_I64, _EMPTY_U8)
    return done / (time.perf_counter() - t0)


def time_stream(g, vi, workers: int, attempts: int, detector="brent", window: int = 2,
                seed: int = 0) -> float:
    """Attempts per second of a full sampling stream (generation plus decoding).

    Every worker runs about ``attempts`` attempts, so ideal scaling keeps the
    wall time flat as workers are added.
    """
    probe = SampleStream(g, vi, workers=1, seed=seed, detector=detector, window=window,
                         chunk_attempts=min(attempts, 1 << 14))
    probe.pool(64)
    rate = probe.accepted / probe.attempts
    target = max(workers, int(rate * attempts * workers))
    stream = SampleStream(g, vi, workers=workers, seed=seed, detector=detector, window=window)
    t0 = time.perf_counter()
    stream.ensure(target)
    return stream.attempts / (time.perf_counter() - t0)
