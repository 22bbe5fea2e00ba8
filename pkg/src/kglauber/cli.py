"""Command-line surface.

Subcommands: ``sample`` (one configuration + telemetry), ``verify``
(self-check suites), ``spectra`` (per-level contraction CSV), ``hwprobe``
(quadratic-form tail calibration CSV), ``bench`` (sampler vs sequential
baseline CSV). All outputs are UTF-8 text; CSV files carry a
schema_version field; every randomized command takes --seed and is
bit-reproducible in its primary outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import exact
from .bench import run_bench
from .errors import ConvergenceError, DepthExceeded, MaxTriesExceeded
from .hwprobe import DEFAULT_T_GRID, probe_tails
from .model import (load_coupling_matrix, load_field_vector, new_ising,
                    operator_norm, sk_model)
from .parallel import SamplerConfig, default_config, sample_configuration
from .rng import RngStream
from .verify import SUITES, run_suite

SCHEMA_VERSION = 1


def _threads_default() -> int:
    env = os.environ.get("KGLAUBER_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_model(args) -> "new_ising":
    J_raw = load_coupling_matrix(args.J, size=args.size)
    if args.h is not None:
        h = load_field_vector(args.h, size=J_raw.shape[0])
    else:
        h = np.zeros(J_raw.shape[0])
    return new_ising(J_raw, h)


def _resolve_config(model, args) -> SamplerConfig:
    norm = operator_norm(model, 1e-6)
    margin = min(max(1.0 - norm, 0.01), 0.99)
    base = default_config(margin, args.eps, threads=args.threads)
    return SamplerConfig(
        c1=args.c1 if args.c1 is not None else base.c1,
        c3=args.c3 if args.c3 is not None else base.c3,
        C2=args.C2 if args.C2 is not None else base.C2,
        C4=args.C4 if args.C4 is not None else base.C4,
        eps=args.eps, threads=args.threads)


def cmd_sample(args) -> int:
    model = _load_model(args)
    cfg = _resolve_config(model, args)
    spins, telemetry = sample_configuration(model, cfg, RngStream(args.seed))
    lines = "\n".join("1" if v > 0 else "-1" for v in spins.values) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    if args.telemetry:
        payload = telemetry.to_json_dict()
        with open(args.telemetry, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_verify(args) -> int:
    results = run_suite(args.suite, args.n_max, args.seed)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name:<{width}}  {r.detail}")
        failures += 0 if r.passed else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def cmd_spectra(args) -> int:
    if args.J is not None:
        model = _load_model(args)
    else:
        model = sk_model(args.n, args.beta, args.seed)
    n = model.n
    if n > exact.MAX_LADDER_N:
        raise ValueError(f"spectra needs n <= {exact.MAX_LADDER_N}, got {n}")
    ladder = exact.full_ladder(model)
    kappa = {m: exact.chi2_down_contraction(model, m, ladder)
             for m in range(1, n + 1)}
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# kglauber spectra schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(["level", "kappa_chi2", "kappa_bound", "gap",
                         "bl_gap_formula"])
        for m in range(1, n + 1):
            gap = exact.spectral_gap(exact.down_up_walk(model, m, ladder))
            bound = exact.contraction_lower_bound(kappa[n], n, m)
            writer.writerow([m, repr(kappa[m]), repr(bound), repr(gap),
                             repr(exact.bernoulli_laplace_gap(n, m))])
    print(f"wrote {n} levels to {args.out}")
    return 0


def cmd_hanson_wright_probe(args) -> int:
    t_grid = args.t_grid if args.t_grid is not None else list(DEFAULT_T_GRID)
    rows, recommended = probe_tails(args.n, args.frob_grid, args.trials,
                                    args.seed, t_grid=t_grid)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frob", "t", "tail_hat", "bound", "pass",
                         "schema_version"])
        for r in rows:
            writer.writerow([repr(r.frob), repr(r.t), repr(r.tail_hat),
                             repr(r.bound), int(r.passed), SCHEMA_VERSION])
    print(f"recommended_c3={recommended!r}")
    return 0


def cmd_bench(args) -> int:
    rows, pool_walls = run_bench(args.n, args.beta, args.eps,
                                 args.threads_list, range(args.seeds),
                                 pool_runs=args.pool_runs)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "beta", "threads", "wall_time_parallel",
                         "wall_time_glauber_baseline", "outer_steps",
                         "frobenius_norm", "seed", "schema_version"])
        for r in rows:
            writer.writerow([r.n, repr(r.beta), r.threads,
                             repr(r.wall_time_parallel),
                             repr(r.wall_time_glauber_baseline),
                             r.outer_steps, repr(r.frobenius_norm), r.seed,
                             SCHEMA_VERSION])
    for threads, wall in sorted(pool_walls.items()):
        print(f"pool_runs={args.pool_runs} threads={threads} "
              f"wall={wall:.3f}s")
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kglauber",
        description="Block-resampling Ising sampler and its exact "
                    "verification oracle")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw one configuration")
    p.add_argument("--J", required=True, help="coupling matrix file "
                   "(dense CSV or 'i j value' triplets)")
    p.add_argument("--h", default=None, help="field vector file, one value "
                   "per line (default zero)")
    p.add_argument("--size", type=int, default=None,
                   help="dimension for sparse files whose max index is low")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_threads_default())
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c3", type=float, default=None)
    p.add_argument("--C2", type=float, default=None)
    p.add_argument("--C4", type=float, default=None)
    p.add_argument("--out", default=None, help="output file, one +-1 per line")
    p.add_argument("--telemetry", default=None, help="telemetry JSON file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="run self-check suites")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--n-max", type=int, default=6, dest="n_max")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectra", help="per-level contraction CSV")
    p.add_argument("--J", default=None)
    p.add_argument("--h", default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("hwprobe", help="quadratic-form tail calibration")
    p.add_argument("--frob-grid", type=_float_list,
                   default=[0.05, 0.1, 0.25, 0.5, 0.75, 1.0],
                   dest="frob_grid")
    p.add_argument("--t-grid", type=_float_list, default=None, dest="t_grid")
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hanson_wright_probe)

    p = sub.add_parser("bench", help="sampler vs sequential baseline timings")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--threads-list", type=_int_list, default=[1, 8],
                   dest="threads_list")
    p.add_argument("--seeds", type=int, default=3,
                   help="number of instances (seeds 0..k-1)")
    p.add_argument("--pool-runs", type=int, default=0, dest="pool_runs",
                   help="also time drawing this many samples on the pool")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MaxTriesExceeded, DepthExceeded, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
