"""Benchmark harness: recursive sampler vs a sequential single-site baseline.

The baseline budget is ceil(n ln n / (1-||J||)) * 8 single-site steps,
reflecting the O(n ln n) mixing regime the sampler's outer-step budget is
calibrated against. Wall times are per-invocation; medians across seeds
are the headline numbers (hardware variance).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .glauber import run_chain_batch
from .model import IsingModel, operator_norm, sk_model
from .parallel import default_config, run_replicas, sample_configuration
from .rng import RngStream

BASELINE_STEP_SCALE = 8


@dataclass(frozen=True)
class BenchReport:
    n: int
    beta: float
    threads: int
    wall_time_parallel: float
    wall_time_glauber_baseline: float
    outer_steps: int
    frobenius_norm: float
    seed: int


def baseline_steps(n: int, norm: float) -> int:
    return int(math.ceil(n * math.log(n) / max(1.0 - norm, 1e-3))) * BASELINE_STEP_SCALE


def warmup_kernels() -> None:
    """Compile the sampler and chain kernels on a tiny instance so timed
    runs never include JIT cost."""
    from .parallel import SamplerConfig

    model = sk_model(8, 0.4, 0)
    cfg = SamplerConfig(c1=0.02, c3=0.05, C2=2.0, C4=4.0, eps=0.25)
    sample_configuration(model, cfg, RngStream(0))
    run_chain_batch(model, 4, RngStream(0), replicas=2)


def bench_instance(model: IsingModel, eps: float, threads_list, seed: int,
                   norm: float | None = None) -> list[BenchReport]:
    """Time the sampler at each thread count plus one sequential baseline."""
    n = model.n
    if norm is None:
        norm = operator_norm(model, 1e-6)
    frob = float(np.linalg.norm(model.J))
    c_margin = min(max(1.0 - norm, 0.01), 0.99)

    steps = baseline_steps(n, norm)
    t0 = time.perf_counter()
    run_chain_batch(model, steps, RngStream(seed, path=(0xB5,)), replicas=1)
    wall_baseline = time.perf_counter() - t0

    rows = []
    for threads in threads_list:
        cfg = default_config(c_margin, eps, threads=int(threads))
        t0 = time.perf_counter()
        _, tel = sample_configuration(model, cfg, RngStream(seed))
        wall = time.perf_counter() - t0
        rows.append(BenchReport(n=n, beta=float("nan"), threads=int(threads),
                                wall_time_parallel=wall,
                                wall_time_glauber_baseline=wall_baseline,
                                outer_steps=tel.root_outer_steps,
                                frobenius_norm=frob, seed=seed))
    return rows


def run_bench(n: int, beta: float, eps: float, threads_list, seeds,
              pool_runs: int = 0):
    """Bench spin-glass instances across seeds and thread counts.

    Returns ``(rows, pool_walls)``. With ``pool_runs > 0``, ``pool_walls``
    maps each thread count to the wall time of drawing that many
    independent samples of the first instance on the worker pool — the
    multi-sample throughput the pool exists for.
    """
    warmup_kernels()
    rows: list[BenchReport] = []
    first_model = None
    first_margin = None
    for seed in seeds:
        model = sk_model(n, beta, seed)
        norm = operator_norm(model, 1e-6)
        for row in bench_instance(model, eps, threads_list, seed, norm=norm):
            rows.append(BenchReport(n=row.n, beta=beta, threads=row.threads,
                                    wall_time_parallel=row.wall_time_parallel,
                                    wall_time_glauber_baseline=row.wall_time_glauber_baseline,
                                    outer_steps=row.outer_steps,
                                    frobenius_norm=row.frobenius_norm,
                                    seed=row.seed))
        if first_model is None:
            first_model = model
            first_margin = min(max(1.0 - norm, 0.01), 0.99)

    pool_walls: dict[int, float] = {}
    if pool_runs > 0 and first_model is not None:
        for threads in threads_list:
            cfg = default_config(first_margin, eps, threads=int(threads))
            t0 = time.perf_counter()
            run_replicas(first_model, cfg, RngStream(0xB00), pool_runs)
            pool_walls[int(threads)] = time.perf_counter() - t0
    return rows, pool_walls
