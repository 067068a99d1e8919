"""Compare the compiled and pure-Python kernels on one synthetic graph.

Usage::

    python benchmarks/bench_kernels.py --nodes 20000 --density 10 --suspects 500
"""
import argparse
import time

import numpy as np

from sawblock._backend import compiled_kernels, python_kernels
from sawblock.graph import random_suspects, synth_graph
from sawblock.prng import seed_state
from sawblock.sampler import DETECTORS, prepare

EMPTY_I64 = np.empty(0, dtype=np.int64)
EMPTY_U8 = np.empty(0, dtype=np.uint8)


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def run(mod, g, vi, attempts, detector, runs):
    prep = prepare(g, vi, mod)
    state = seed_state(1, 0)
    gen, t_gen = timed(mod.generate, prep, state, attempts, attempts, DETECTORS[detector], 2,
                       g.n, EMPTY_I64, EMPTY_U8)
    dec, t_dec = timed(mod.decode, prep, gen[2], gen[3], EMPTY_I64)
    rem = np.zeros(g.m, dtype=np.uint8)
    rem[: g.m // 100] = 1
    sim, t_sim = timed(mod.simulate, prep, rem, EMPTY_U8, state, runs, 1 << 62)
    return {
        "generate attempts/s": gen[1] / t_gen,
        "decode walks/s": len(gen[2]) / t_dec if t_dec else float("inf"),
        "simulate runs/s": sim[1] / t_sim,
    }, (gen[0], gen[1], gen[2].tolist(), gen[3].tolist(), [a.tolist() for a in dec], sim)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=20000)
    ap.add_argument("--density", type=float, default=10)
    ap.add_argument("--suspects", type=int, default=500)
    ap.add_argument("--attempts", type=int, default=20000, help="attempts for the compiled kernel")
    ap.add_argument("--runs", type=int, default=20, help="paired simulations for the compiled kernel")
    ap.add_argument("--detector", choices=sorted(DETECTORS), default="brent")
    ap.add_argument("--ratio", type=int, default=20,
                    help="the pure-Python kernel gets 1/RATIO of the work")
    args = ap.parse_args(argv)

    g = synth_graph(args.nodes, args.density, 7)
    vi = random_suspects(g, args.suspects, 7)
    print(f"graph n={g.n} m={g.m}, {len(vi)} suspects, detector={args.detector}")
    compiled = compiled_kernels()
    small = max(1, args.attempts // args.ratio), max(1, args.runs // args.ratio)
    py, py_out = run(python_kernels, g, vi, small[0], args.detector, small[1])
    rows = [("python", py)]
    if compiled is None:
        print("compiled kernels not built; showing the fallback only")
    else:
        c, _ = run(compiled, g, vi, args.attempts, args.detector, args.runs)
        _, c_out = run(compiled, g, vi, small[0], args.detector, small[1])
        if c_out != py_out:
            raise SystemExit("backends disagree on identical work")
        rows.insert(0, ("cython", c))
    keys = list(py)
    print(f"{'backend':<8}" + "".join(f"{k:>24}" for k in keys))
    for name, res in rows:
        print(f"{name:<8}" + "".join(f"{res[k]:>24,.0f}" for k in keys))
    if compiled is not None:
        print(f"{'speedup':<8}" + "".join(f"{rows[0][1][k] / py[k]:>23.1f}x" for k in keys))


if __name__ == "__main__":
    main()
