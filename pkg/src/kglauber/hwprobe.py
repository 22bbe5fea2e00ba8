"""Empirical tail calibration for quadratic forms of random spins.

For a symmetric zero-diagonal matrix A and independent Rademacher vectors
X, Z, the difference Z.A.Z - X.A.X has sub-exponential tails controlled by
||A||_F. The leaf threshold of the recursive sampler needs the explicit
tail bound P(|Z.A.Z - X.A.X| >= t) <= 2 exp(-2t); this probe measures the
largest Frobenius norm on a grid for which the bound holds empirically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream

DEFAULT_T_GRID = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
_CHUNK = 1 << 15


@dataclass(frozen=True)
class TailRow:
    frob: float
    t: float
    tail_hat: float
    bound: float
    passed: bool


def random_coupling_direction(n: int, rng: RngStream) -> np.ndarray:
    """Symmetric zero-diagonal matrix with unit Frobenius norm."""
    A = rng.normals(n * n).reshape(n, n)
    A = 0.5 * (A + A.T)
    np.fill_diagonal(A, 0.0)
    return A / np.linalg.norm(A)


def quadratic_difference_samples(A: np.ndarray, trials: int,
                                 rng: RngStream) -> np.ndarray:
    """iid draws of Z.A.Z - X.A.X with X, Z uniform on {-1,+1}^n."""
    n = A.shape[0]
    out = np.empty(trials)
    done = 0
    block = 0
    while done < trials:
        take = min(_CHUNK, trials - done)
        u = rng.split(block).uniforms(2 * take * n).reshape(2, take, n)
        X = np.where(u[0] < 0.5, -1.0, 1.0)
        Z = np.where(u[1] < 0.5, -1.0, 1.0)
        out[done:done + take] = (np.sum((Z @ A) * Z, axis=1)
                                 - np.sum((X @ A) * X, axis=1))
        done += take
        block += 1
    return out


def probe_tails(n: int, frob_grid, trials: int, seed: int,
                t_grid=DEFAULT_T_GRID) -> tuple[list[TailRow], float]:
    """Tail table over (frob, t) plus the recommended leaf threshold.

    One random direction matrix is rescaled to every Frobenius value, so
    pass/fail is monotone along the grid up to Monte Carlo noise. The
    recommendation is the largest grid prefix on which every t passes.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    frob_grid = sorted(float(f) for f in frob_grid)
    root = RngStream(seed, path=(0x4857,))
    direction = random_coupling_direction(n, root.split(0))
    rows: list[TailRow] = []
    recommended = 0.0
    prefix_ok = True
    for fi, frob in enumerate(frob_grid):
        if frob == 0.0:
            samples = np.zeros(trials)
        else:
            samples = quadratic_difference_samples(frob * direction, trials,
                                                   root.split(1).split(fi))
        all_pass = True
        for t in t_grid:
            tail = float(np.mean(np.abs(samples) >= t))
            bound = float(2.0 * np.exp(-2.0 * t))
            ok = tail <= bound
            all_pass = all_pass and ok
            rows.append(TailRow(frob=frob, t=float(t), tail_hat=tail,
                                bound=bound, passed=ok))
        if prefix_ok and all_pass:
            recommended = frob
        elif not all_pass:
            prefix_ok = False
    return rows, recommended
