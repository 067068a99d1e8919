"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import GraphFormatError, ReplayError, SamplingExhausted
from .evaluation import (BASELINES, RemovalSet, analyze_solution, baseline,
                         estimate_suspension_detail, suspension_curves, write_curves)
from .graph import (CandidateSet, is_binary_cache, load_binary, load_candidates, load_edge_list,
                    load_suspects, random_suspects, synth_graph, write_mapping)
from .interdiction import interdict
from .partition import (METHODS, distributed_sample, extend_partition, partition_graph,
                        write_partition_file)
from .prng import seed_state
from .sampler import DEFAULT_ATTEMPT_CAP, DETECTORS, SampleStream, estimate_influence

EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _unit_open(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _default_workers():
    try:
        return max(1, int(os.environ.get("HSAW_THREADS", "1")))
    except ValueError:
        return 1


def _add_graph(p, suspects=True, require_suspects=True):
    p.add_argument("--graph", required=True, help="edge list 'u v [w]' or HSAW1 cache")
    p.add_argument("--weights", choices=("given", "indegree", "random"), default="given",
                   help="edge weight mode for text edge lists (default: given)")
    p.add_argument("--symmetrize", action="store_true", help="add reverse edges before weighting")
    p.add_argument("--remap", action="store_true", help="accept arbitrary node labels")
    p.add_argument("--mapping", help="write the dense-id to label mapping here")
    if suspects:
        grp = p.add_mutually_exclusive_group(required=require_suspects)
        grp.add_argument("--suspects", help="suspect file 'node prob'")
        grp.add_argument("--random-suspects", type=_positive_int, metavar="COUNT",
                         help="draw COUNT random suspects from --seed")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="write JSON here instead of stdout")


def _add_sampling(p):
    p.add_argument("--workers", type=_positive_int, default=_default_workers(),
                   help="sampling workers (default: $HSAW_THREADS or 1)")
    p.add_argument("--detector", choices=sorted(DETECTORS), default="brent")
    p.add_argument("--window", type=int, default=2, help="exact short-cycle window (default: 2)")
    p.add_argument("--attempt-cap", type=_positive_int, default=DEFAULT_ATTEMPT_CAP,
                   help="walk attempts per worker before giving up (default: 1e8)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sawblock", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("interdict", help="choose k edges or nodes to remove")
    _add_graph(p)
    _add_common(p)
    _add_sampling(p)
    p.add_argument("--mode", choices=("edge", "node"), required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--epsilon", type=_unit_open, default=0.1)
    p.add_argument("--delta", type=_unit_open, default=0.1)
    p.add_argument("--candidates", default="all", help="candidate file or 'all'")
    p.add_argument("--trace", action="store_true", help="include the per-iteration trace")
    p.add_argument("--deterministic", action="store_true", help="report wall time as 0")

    p = sub.add_parser("estimate", help="estimate the suspension of a removal set")
    _add_graph(p)
    _add_common(p)
    p.add_argument("--mode", choices=("edge", "node"), required=True)
    p.add_argument("--removal", required=True, help="edge lines 'u v' or one node per line")
    p.add_argument("--epsilon", type=_unit_open, default=0.1)
    p.add_argument("--delta", type=_unit_open, default=0.1)
    p.add_argument("--draw-cap", type=_positive_int, default=10**9,
                   help="random draws before reporting a capped zero estimate")

    p = sub.add_parser("baseline", help="removal set from a comparator heuristic")
    _add_graph(p)
    _add_common(p)
    p.add_argument("--method", choices=BASELINES, required=True)
    p.add_argument("--mode", choices=("edge", "node"), required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--evaluate", action="store_true", help="also estimate the suspension")
    p.add_argument("--epsilon", type=_unit_open, default=0.1)
    p.add_argument("--delta", type=_unit_open, default=0.1)
    p.add_argument("--draw-cap", type=_positive_int, default=10**9,
                   help="random draws before reporting a capped zero estimate")
    p.add_argument("--curves", metavar="CSV",
                   help="write suspension curves for k=1..K of every method to CSV")

    p = sub.add_parser("sample", help="draw hitting walks and report pool statistics")
    _add_graph(p)
    _add_common(p)
    _add_sampling(p)
    p.add_argument("--count", type=_positive_int, default=10000)
    p.add_argument("--dump", help="write 'worker seq len v1 ... vl' lines here")

    p = sub.add_parser("partition", help="partition, extend, and measure crossing walks")
    _add_graph(p, require_suspects=False)
    _add_common(p)
    _add_sampling(p)
    p.add_argument("--parts", type=_positive_int, required=True)
    p.add_argument("--method", choices=METHODS, default="labelprop")
    p.add_argument("--part-file", help="part vector for --method file")
    p.add_argument("--hops", type=int, default=1)
    p.add_argument("--count", type=int, default=0, help="walks to sample across parts (0: none)")
    p.add_argument("--write-parts", help="write the part vector here")

    p = sub.add_parser("synth", help="generate a random graph with 1/in-degree weights")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--density", type=float, required=True, help="edges per node")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", required=True, help="edge list path")
    p.add_argument("--binary", action="store_true", help="write an HSAW1 cache instead")

    p = sub.add_parser("bench", help="walk attempts per second")
    p.add_argument("--graph", help="graph file (default: synthetic)")
    p.add_argument("--weights", choices=("given", "indegree", "random"), default="given")
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--remap", action="store_true")
    p.add_argument("--mapping")
    p.add_argument("--nodes", type=int, default=100000)
    p.add_argument("--density", type=float, default=10)
    p.add_argument("--random-suspects", type=_positive_int, default=1000, metavar="COUNT")
    p.add_argument("--attempts", type=_positive_int, default=10**6,
                   help="attempts per worker")
    p.add_argument("--workers", type=_positive_int, nargs="+", default=[1])
    p.add_argument("--detector", choices=sorted(DETECTORS), default="brent")
    p.add_argument("--window", type=int, default=2)
    _add_common(p)
    return parser


def _load_graph(args):
    if is_binary_cache(args.graph):
        g = load_binary(args.graph)
    else:
        g = load_edge_list(args.graph, args.weights, args.seed, symmetrize=args.symmetrize,
                           remap=args.remap)
    if args.mapping:
        write_mapping(g, args.mapping)
    return g


def _load_suspects(args, g):
    if getattr(args, "suspects", None):
        return load_suspects(args.suspects, g)
    return random_suspects(g, args.random_suspects, args.seed)


def _emit(args, payload):
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_removal(path, g, kind) -> RemovalSet:
    ids = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            if kind == "edge":
                if len(parts) != 2:
                    raise GraphFormatError(f"{path}:{lineno}: expected 'u v'")
                ids.add(g.edge_id(g.node_of(parts[0]), g.node_of(parts[1])))
            else:
                if len(parts) != 1:
                    raise GraphFormatError(f"{path}:{lineno}: expected one node id")
                ids.add(g.node_of(parts[0]))
    return RemovalSet.of(kind, ids)


def _labels(g, kind, ids):
    """Report items in input labels: nodes as labels, edges as [u, v] pairs."""
    if kind == "node":
        return [g.label_of(v) for v in ids]
    return [[g.label_of(int(g.edge_src[e])), g.label_of(int(g.edge_dst[e]))] for e in ids]


def cmd_interdict(args):
    g = _load_graph(args)
    vi = _load_suspects(args, g)
    cands = (CandidateSet.all(args.mode) if args.candidates == "all"
             else load_candidates(args.candidates, g, args.mode))
    res = interdict(args.mode, g, vi, cands, args.k, args.epsilon, args.delta,
                    stream=_stream(args, g, vi))
    if args.deterministic:
        res.wall_time_s = 0.0
    _emit(args, res.to_json(include_trace=args.trace))


def cmd_estimate(args):
    g = _load_graph(args)
    vi = _load_suspects(args, g)
    r = _read_removal(args.removal, g, args.mode)
    est = estimate_suspension_detail(g, vi, r, args.epsilon, args.delta,
                                     seed_state(args.seed, 0xE5), args.draw_cap)
    _emit(args, {"kind": args.mode, "removal_size": len(r.ids), "suspension": est.value,
                 "runs": est.runs, "capped": est.capped, "epsilon": args.epsilon,
                 "delta": args.delta})


def cmd_baseline(args):
    g = _load_graph(args)
    vi = _load_suspects(args, g)
    state = seed_state(args.seed, 0xBA5E)
    r = baseline(g, vi, args.method, args.mode, args.k, state)
    ids = sorted(r.ids)
    out = {"method": args.method, "kind": args.mode, "k": args.k,
           "solution": ids, "labels": _labels(g, args.mode, ids)}
    if args.evaluate:
        out["suspension"] = estimate_suspension_detail(
            g, vi, r, args.epsilon, args.delta, seed_state(args.seed, 0xE5),
            args.draw_cap).value
    if args.mode == "node":
        out["ssr"], out["cost"] = analyze_solution(g, vi, r)
    if args.curves:
        rows = suspension_curves(g, vi, args.mode, range(1, args.k + 1),
                                 ("sia",) + BASELINES, state, args.epsilon, args.delta,
                                 draw_cap=args.draw_cap)
        write_curves(args.curves, rows)
    _emit(args, out)


def _stream(args, g, vi, **kw):
    return SampleStream(g, vi, workers=args.workers, seed=args.seed, detector=args.detector,
                        window=args.window, attempt_cap=args.attempt_cap, **kw)


def cmd_sample(args):
    g = _load_graph(args)
    vi = _load_suspects(args, g)
    t0 = time.perf_counter()
    pool = _stream(args, g, vi).pool(args.count)
    elapsed = time.perf_counter() - t0
    if args.dump:
        with open(args.dump, "w") as fh:
            pool.dump(fh)
    lengths = np.diff(pool.offsets) - 1
    _emit(args, {"samples": pool.accepted, "attempts": pool.attempts,
                 "influence": estimate_influence(pool, g.n),
                 "mean_length": float(lengths.mean()) if len(lengths) else 0.0,
                 "max_length": int(lengths.max()) if len(lengths) else 0,
                 "workers": args.workers, "backend": BACKEND, "seconds": elapsed})


def cmd_partition(args):
    g = _load_graph(args)
    part = partition_graph(g, args.parts, args.method, args.seed, path=args.part_file)
    part = extend_partition(g, part, args.hops)
    if args.write_parts:
        write_partition_file(part, args.write_parts)
    out = part.report()
    out["method"] = args.method
    if args.count > 0:
        if not (args.suspects or args.random_suspects):
            raise UsageError("partition: --count needs --suspects or --random-suspects")
        vi = _load_suspects(args, g)
        pool, frac = distributed_sample(g, vi, part, args.count, workers=args.workers,
                                        seed=args.seed, detector=args.detector,
                                        window=args.window, attempt_cap=args.attempt_cap)
        out.update(samples=pool.accepted, attempts=pool.attempts, crossings=pool.crossings,
                   crossing_fraction=frac)
    _emit(args, out)


def cmd_synth(args):
    g = synth_graph(args.nodes, args.density, args.seed)
    if args.binary:
        g.save_binary(args.output)
    else:
        g.write_edge_list(args.output)
    sys.stderr.write(f"wrote n={g.n} m={g.m} to {args.output}\n")


def cmd_bench(args):
    from ._backend import compiled_kernels, python_kernels

    if args.graph:
        g = _load_graph(args)
    else:
        g = synth_graph(args.nodes, args.density, args.seed)
    vi = random_suspects(g, min(args.random_suspects, g.n), args.seed)
    rows = []
    backends = [("python", python_kernels)]
    if compiled_kernels() is not None:
        backends.insert(0, ("cython", compiled_kernels()))
    from .bench import time_generate, time_stream
    for name, mod in backends:
        attempts = args.attempts if name == "cython" else max(1, args.attempts // 100)
        rate = time_generate(mod, g, vi, attempts, args.detector, args.window, args.seed)
        rows.append({"backend": name, "workers": 1, "attempts_per_sec": rate})
    base = None
    for w in args.workers:
        rate = time_stream(g, vi, w, args.attempts, args.detector, args.window, args.seed)
        base = base or rate
        rows.append({"backend": BACKEND, "workers": w, "attempts_per_sec": rate,
                     "scaling": rate / base})
    _emit(args, {"n": g.n, "m": g.m, "suspects": len(vi), "results": rows})


COMMANDS = {"interdict": cmd_interdict, "estimate": cmd_estimate, "baseline": cmd_baseline,
            "sample": cmd_sample, "partition": cmd_partition, "synth": cmd_synth,
            "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, OSError) as exc:
        print(f"sawblock: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SamplingExhausted, ReplayError, MemoryError) as exc:
        print(f"sawblock: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"sawblock: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
