"""Reference chains: single-site Glauber and exact k-subset resampling.

These are the correctness baselines. Each step resamples coordinates from
the exact conditional law (single-site closed form, or brute-force
enumeration of the 2^k conditional weights for a subset), so the only
approximation anywhere is Monte Carlo error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import IsingModel, SpinVector, prob_plus
from .rng import RngStream
from .sampling import sample_subset

_MAX_EXACT_SUBSET = 20  # 2^k conditional weights are enumerated


@dataclass(frozen=True)
class ChainState:
    """A full configuration plus how many steps produced it."""

    x: SpinVector
    step_count: int = 0


def site_flip_probability(model: IsingModel, values: np.ndarray, i: int) -> float:
    """P(X_i = +1 | rest) = sigma(2*(J_i.x + h_i)); J_ii = 0 makes the
    current value of x_i irrelevant."""
    theta = float(model.J[i] @ values.astype(np.float64) + model.h[i])
    return prob_plus(theta)


def glauber_step(model: IsingModel, state: ChainState, rng: RngStream) -> ChainState:
    """Resample one uniformly chosen coordinate from its conditional law."""
    n = model.n
    i = rng.integer(n)
    p = site_flip_probability(model, state.x.values, i)
    values = state.x.values.copy()
    values[i] = 1 if rng.uniform() < p else -1
    return ChainState(SpinVector.full(values), state.step_count + 1)


def k_glauber_step_exact(model: IsingModel, state: ChainState, k: int,
                         rng: RngStream) -> ChainState:
    """Resample a uniform size-k subset jointly from its exact conditional.

    The conditional of X_S given the rest is the Ising model on S with
    couplings J_{SxS} and field J_{SxS^c} x_{S^c} + h_S; its 2^k weights are
    enumerated and normalized by log-sum-exp.
    """
    n = model.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    if k > _MAX_EXACT_SUBSET:
        raise ValueError(f"k={k} too large for exact enumeration (max "
                         f"{_MAX_EXACT_SUBSET})")
    S = sample_subset(rng, n, k)
    comp = S.complement()
    v = state.x.values.astype(np.float64)
    field = model.J[np.ix_(S.members, comp)] @ v[comp] + model.h[S.members]
    Jss = model.J[np.ix_(S.members, S.members)]
    X = spin_table(k)
    logw = 0.5 * np.einsum("si,ij,sj->s", X, Jss, X) + X @ field
    p = np.exp(logw - logsumexp(logw))
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, rng.uniform() * cdf[-1]))
    values = state.x.values.copy()
    values[S.members] = X[idx].astype(np.int8)
    return ChainState(SpinVector.full(values), state.step_count + 1)


def run_chain(model: IsingModel, x0: SpinVector, stepper, steps: int,
              rng: RngStream) -> ChainState:
    """Iterate ``stepper(model, state, rng)`` for ``steps`` steps."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    state = ChainState(x0, 0)
    for _ in range(steps):
        state = stepper(model, state, rng)
    return state


def run_chain_batch(model: IsingModel, steps: int, rng: RngStream,
                    replicas: int, threads: int = 1) -> np.ndarray:
    """Final states of independent single-site chains (compiled path).

    Replica r runs on ``rng.split(r)``: the start configuration comes from
    the product law with weights exp(h_i x_i) on child stream 0, the chain
    itself on child stream 1. Returns an (replicas, n) +-1 int8 array,
    independent of ``threads`` by the stream contract.
    """
    from concurrent.futures import ThreadPoolExecutor

    from . import _kernels

    keys = np.array([rng.split(r).key for r in range(replicas)],
                    dtype=np.uint64)
    out = np.empty((replicas, model.n), dtype=np.int8)
    J = np.ascontiguousarray(model.J)
    h = np.ascontiguousarray(model.h)
    if threads <= 1:
        _kernels.glauber_chain_batch(J, h, keys, steps, out)
        return out
    bounds = np.linspace(0, replicas, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(_kernels.glauber_chain_batch, J, h,
                            keys[lo:hi], steps, out[lo:hi])
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        for f in futs:
            f.result()
    return out


def spin_table(k: int) -> np.ndarray:
    """All 2^k assignments as a (2^k, k) +-1 float array.

    Row r has coordinate j equal to +1 iff bit j of r is set; this indexing
    convention is shared with the exact enumeration module.
    """
    if k > _MAX_EXACT_SUBSET:
        raise ValueError(f"k={k} too large to enumerate")
    if k not in _SPIN_TABLES:
        r = np.arange(2**k, dtype=np.int64)
        bits = (r[:, None] >> np.arange(k)) & 1
        _SPIN_TABLES[k] = np.where(bits == 1, 1.0, -1.0)
        _SPIN_TABLES[k].setflags(write=False)
    return _SPIN_TABLES[k]


_SPIN_TABLES: dict[int, np.ndarray] = {}
