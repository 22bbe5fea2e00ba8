"""Recursive block sampler for Ising models.

One node handles a coordinate block R with an effective field h. If the
coupling submatrix J_RR is small in Frobenius norm, the node draws from
the exact conditional by rejection sampling against the product proposal
q(x) ~ exp(<h,x>) with log ratio g(x) = 0.5 x.J_RR.x and cutoff
c = C4 ln(n/eps). Otherwise it runs T = floor(C2 ln(n/eps) m/s) sequential
block-resampling iterations: each picks a uniform subset S of size
s = ceil(c1 m / (ln(n/eps) ||J_RR||_F)) and recurses on S with the field
J_{S x R\\S} y_{R\\S} + h_S, which targets exactly the conditional law of
X_S given the rest. ln(n/eps) always refers to the root problem size.

Everything is driven by splittable streams, so output is a pure function
of (model, config, seed): worker counts and scheduling cannot change it.

Two interchangeable engines exist: a compiled kernel (default) and a pure
Python reference that additionally records per-node instrumentation; they
produce bit-identical output by construction (and by test).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .errors import DepthExceeded, MaxTriesExceeded
from .model import IsingModel, SpinVector, SubsetIndex, prob_plus
from .rejection import default_max_tries
from .rng import RngStream, derive_key, uniform_at

DEFAULT_C3 = 0.25
DEFAULT_C1 = 0.125
DEFAULT_C2_SCALE = 8.0
DEFAULT_C2_CAP = 64.0
DEFAULT_C4 = 4.0
DEFAULT_MAX_DEPTH = 64


@dataclass(frozen=True)
class SamplerConfig:
    """Constants of the recursive sampler; all exposed as CLI flags."""

    c1: float
    c3: float
    C2: float
    C4: float
    eps: float
    threads: int = 1
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if min(self.c1, self.c3, self.C2, self.C4) <= 0:
            raise ValueError("all sampler constants must be positive")
        if self.c1 > self.c3 / 2:
            raise ValueError(
                f"need c1 <= c3/2 so subset sizes stay within blocks "
                f"(got c1={self.c1}, c3={self.c3})")
        if not 0 < self.eps < 0.5:
            raise ValueError(f"eps must lie in (0, 1/2), got {self.eps}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def with_threads(self, threads: int) -> "SamplerConfig":
        return replace(self, threads=threads)


def default_config(norm_bound_c: float, eps: float, threads: int = 1) -> SamplerConfig:
    """Calibrated defaults for ||J|| <= 1 - norm_bound_c.

    C2 scales like 1/norm_bound_c (halving the margin doubles the outer
    step budget), capped at 64; c1 is the largest value the c1 <= c3/2
    constraint allows.
    """
    if not 0 < norm_bound_c < 1:
        raise ValueError(f"norm_bound_c must lie in (0,1), got {norm_bound_c}")
    c2 = min(DEFAULT_C2_SCALE / norm_bound_c, DEFAULT_C2_CAP)
    return SamplerConfig(c1=DEFAULT_C1, c3=DEFAULT_C3, C2=c2, C4=DEFAULT_C4,
                         eps=eps, threads=threads)


@dataclass
class RunTelemetry:
    """Recursion-tree and rejection statistics of one sampler invocation."""

    node_count: int
    max_depth_seen: int
    leaf_count: int
    total_rejection_tries: int
    per_level_subset_frobenius: list[float]
    wall_time: float
    seed: int
    root_is_leaf: bool = False
    root_subset_size: int = 0
    root_outer_steps: int = 0

    def __post_init__(self):
        if self.node_count < 1 or self.leaf_count > self.node_count:
            raise ValueError("inconsistent telemetry counts")

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "node_count": self.node_count,
            "max_depth_seen": self.max_depth_seen,
            "leaf_count": self.leaf_count,
            "total_rejection_tries": self.total_rejection_tries,
            "wall_time_s": self.wall_time,
            "seed": self.seed,
        }


def full_region(model: IsingModel) -> SubsetIndex:
    return SubsetIndex(model.n, np.arange(model.n))


def parallel_ising_sample(model: IsingModel, region: SubsetIndex, h_eff,
                          cfg: SamplerConfig, rng: RngStream,
                          capture: list | None = None):
    """Sample X_R approximately from the Ising law mu_{J_RR, h_eff}.

    Returns ``(SpinVector over R, RunTelemetry)``. With ``capture`` given
    (a list), the instrumented pure-Python engine runs instead of the
    compiled kernel — bit-identical output — and appends per-node and
    per-recursive-call records for verification.
    """
    if region.parent_size != model.n:
        raise ValueError("region parent_size does not match model size")
    h_eff = np.ascontiguousarray(h_eff, dtype=np.float64)
    if h_eff.shape != (region.size,):
        raise ValueError(f"h_eff has shape {h_eff.shape}, expected "
                         f"({region.size},)")
    if not np.isfinite(h_eff).all():
        raise ValueError("h_eff must be finite")

    log_n_eps = math.log(model.n / cfg.eps)
    cutoff = cfg.C4 * log_n_eps
    max_tries = default_max_tries(cutoff, model.n, cfg.eps)
    telem = np.zeros(4, dtype=np.int64)
    level_frob = np.zeros(cfg.max_depth + 1, dtype=np.float64)
    extras = np.zeros(3, dtype=np.int64)
    J = np.ascontiguousarray(model.J)
    members = np.ascontiguousarray(region.members)

    start = time.perf_counter()
    if capture is None:
        y = _kernels.sample_node(J, members, h_eff, np.uint64(rng.key),
                                 0, log_n_eps, cfg.c1, cfg.c3, cfg.C2,
                                 cfg.C4, cfg.max_depth, max_tries, telem,
                                 level_frob, extras)
    else:
        y = _sample_node_reference(J, members, h_eff, rng.key, 0, log_n_eps,
                                   cfg, max_tries, telem, level_frob,
                                   extras, capture)
    wall = time.perf_counter() - start

    telemetry = RunTelemetry(
        node_count=int(telem[_kernels.TELEM_NODES]),
        max_depth_seen=int(telem[_kernels.TELEM_MAX_DEPTH]),
        leaf_count=int(telem[_kernels.TELEM_LEAVES]),
        total_rejection_tries=int(telem[_kernels.TELEM_TRIES]),
        per_level_subset_frobenius=[
            float(v) for v in level_frob[:int(telem[_kernels.TELEM_MAX_DEPTH]) + 1]],
        wall_time=wall,
        seed=rng.seed,
        root_is_leaf=bool(extras[0]),
        root_subset_size=int(extras[1]),
        root_outer_steps=int(extras[2]),
    )
    values = np.where(np.asarray(y) > 0, 1, -1).astype(np.int8)
    return SpinVector(region.members, values), telemetry


def sample_configuration(model: IsingModel, cfg: SamplerConfig,
                         rng: RngStream, capture: list | None = None):
    """Sample a full configuration from mu_{J,h}."""
    return parallel_ising_sample(model, full_region(model), model.h, cfg,
                                 rng, capture=capture)


def run_replicas(model: IsingModel, cfg: SamplerConfig, rng: RngStream,
                 count: int, collect_telemetry: bool = False):
    """Draw ``count`` independent full-configuration samples.

    Replica r runs on ``rng.split(r)``. Replicas execute concurrently on a
    pool of ``cfg.threads`` workers (the kernel releases the GIL); the
    result is independent of the worker count by the stream contract.
    Returns an (count, n) int8 array, plus a telemetry list if requested.
    """
    region = full_region(model)
    out = np.empty((count, model.n), dtype=np.int8)
    telemetries: list = [None] * count if collect_telemetry else []

    def work(lo: int, hi: int):
        for r in range(lo, hi):
            spins, tel = parallel_ising_sample(model, region, model.h, cfg,
                                               rng.split(r))
            out[r] = spins.values
            if collect_telemetry:
                telemetries[r] = tel

    workers = max(1, cfg.threads)
    if workers == 1:
        work(0, count)
    else:
        chunk = max(1, math.ceil(count / (workers * 8)))
        bounds = [(lo, min(lo + chunk, count)) for lo in range(0, count, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(work, lo, hi) for lo, hi in bounds]:
                fut.result()
    if collect_telemetry:
        return out, telemetries
    return out


# ---------------------------------------------------------------------------
# pure-Python reference engine (instrumentation + kernel cross-validation)


def _sample_node_reference(J, R, h, key, depth, log_n_eps, cfg, max_tries,
                           telem, level_frob, extras, capture):
    """Mirror of ``_kernels.sample_node``; keep the operation order in sync."""
    m = R.shape[0]
    telem[_kernels.TELEM_NODES] += 1
    if depth > telem[_kernels.TELEM_MAX_DEPTH]:
        telem[_kernels.TELEM_MAX_DEPTH] = depth

    frob = 0.0
    for a in range(m):
        ra = R[a]
        for b in range(m):
            v = J[ra, R[b]]
            frob += v * v
    frob = math.sqrt(frob)
    if frob > level_frob[depth]:
        level_frob[depth] = frob

    y = np.empty(m, np.float64)
    if frob <= cfg.c3:
        telem[_kernels.TELEM_LEAVES] += 1
        if depth == 0:
            extras[0], extras[1], extras[2] = 1, m, 0
        capture.append(("node", depth, R.copy(), h.copy(), frob, True, 0, 0))
        p = np.array([prob_plus(float(hi)) for hi in h])
        cutoff_log = math.log(cfg.C4 * log_n_eps)
        rkey = derive_key(key, 0)
        for j in range(max_tries):
            akey = derive_key(rkey, j)
            xkey = derive_key(akey, 0)
            zkey = derive_key(akey, 1)
            x = np.array([1.0 if uniform_at(derive_key(xkey, i), 0) < p[i]
                          else -1.0 for i in range(m)])
            z = np.array([1.0 if uniform_at(derive_key(zkey, i), 0) < p[i]
                          else -1.0 for i in range(m)])
            g_x = _quad_form_py(J, R, x)
            g_z = _quad_form_py(J, R, z)
            u = uniform_at(derive_key(akey, 2), 0)
            telem[_kernels.TELEM_TRIES] += 1
            if math.log(u) <= g_x - g_z - cutoff_log:
                y[:] = x
                return y
        raise MaxTriesExceeded(
            "rejection sampler exceeded its try budget; cutoff miscalibrated")

    s = int(math.ceil(cfg.c1 * m / (log_n_eps * frob)))
    if s > m:
        raise ValueError("internal error: subset size exceeded block size")
    T = int(math.floor(cfg.C2 * log_n_eps * m / s))
    if depth == 0:
        extras[0], extras[1], extras[2] = 0, s, T
    if depth + 1 > cfg.max_depth:
        raise DepthExceeded("recursive sampler exceeded the depth cap")
    capture.append(("node", depth, R.copy(), h.copy(), frob, False, s, T))

    pkey = derive_key(key, 0)
    for i in range(m):
        y[i] = 1.0 if uniform_at(derive_key(pkey, i), 0) < prob_plus(float(h[i])) else -1.0

    for t in range(1, T + 1):
        itk = derive_key(key, t)
        skey = derive_key(itk, 0)
        arr = list(range(m))
        for j in range(s):
            r = j + int(uniform_at(skey, j) * (m - j))
            arr[j], arr[r] = arr[r], arr[j]
        sel = sorted(arr[:s])
        r_sub = np.empty(s, np.int64)
        h_sub = np.empty(s, np.float64)
        for j in range(s):
            loc = sel[j]
            gi = R[loc]
            acc = float(h[loc])
            for q in range(m):
                acc += J[gi, R[q]] * y[q]
            for q in range(s):
                acc -= J[gi, R[sel[q]]] * y[sel[q]]
            r_sub[j] = gi
            h_sub[j] = acc
        capture.append(("call", depth, R.copy(), h.copy(), r_sub.copy(),
                        y.copy(), h_sub.copy()))
        z_out = _sample_node_reference(J, r_sub, h_sub, derive_key(itk, 1),
                                       depth + 1, log_n_eps, cfg, max_tries,
                                       telem, level_frob, extras, capture)
        for j in range(s):
            y[sel[j]] = z_out[j]
    return y


def _quad_form_py(J, R, x):
    m = R.shape[0]
    total = 0.0
    for a in range(m):
        ra = R[a]
        acc = 0.0
        for b in range(m):
            acc += J[ra, R[b]] * x[b]
        total += x[a] * acc
    return 0.5 * total
