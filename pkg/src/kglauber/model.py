"""Ising models with pairwise couplings J and external field h.

The target law on {-1,+1}^n is mu(x) proportional to
``exp(0.5 * x.J.x + h.x)``. J is stored dense, exactly symmetric, with a
zero diagonal (diagonal terms only shift the normalizer because x_i^2 = 1,
so construction strips them).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError
from .rng import RngStream

_ASYMMETRY_RTOL = 1e-9


def prob_plus(theta):
    """P(x = +1) for the single-spin law with weight exp(theta*x).

    Equals exp(theta)/(exp(theta)+exp(-theta)), evaluated without overflow
    for any finite theta. Works on scalars and arrays.
    """
    t = np.asarray(theta, dtype=np.float64)
    e = np.exp(-2.0 * np.abs(t))
    p = np.where(t >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(p) if np.isscalar(theta) else p


@dataclass(frozen=True)
class IsingModel:
    """Couplings and field; immutable and shareable across workers."""

    J: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=np.float64)
        h = np.asarray(self.h, dtype=np.float64)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError(f"J must be square, got shape {J.shape}")
        if h.shape != (J.shape[0],):
            raise ValueError(f"h has shape {h.shape}, expected ({J.shape[0]},)")
        if not (np.isfinite(J).all() and np.isfinite(h).all()):
            raise ValueError("J and h must be finite")
        if not np.array_equal(J, J.T):
            raise ValueError("J must be exactly symmetric as stored; use new_ising")
        if np.any(np.diagonal(J) != 0.0):
            raise ValueError("J must have a zero diagonal; use new_ising")
        J = J.copy()
        h = h.copy()
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.J.shape[0]


@dataclass(frozen=True)
class SpinVector:
    """Values in {-1,+1} on a strictly increasing index set."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.int8)
        if idx.ndim != 1 or val.shape != idx.shape:
            raise ValueError("indices and values must be 1-d and equal length")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if not np.all(np.abs(val) == 1):
            raise ValueError("values must be +1 or -1")
        idx = idx.copy()
        val = val.copy()
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def full(cls, values) -> "SpinVector":
        values = np.asarray(values)
        return cls(np.arange(values.size), values)

    def __len__(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class ProductDistribution:
    """Independent per-coordinate spin laws with weights exp(theta_i * x_i)."""

    indices: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        th = np.asarray(self.theta, dtype=np.float64)
        if th.shape != idx.shape:
            raise ValueError("theta and indices must have equal length")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if not np.isfinite(th).all():
            raise ValueError("theta must be finite")
        idx = idx.copy()
        th = th.copy()
        idx.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "theta", th)

    @property
    def p_plus(self) -> np.ndarray:
        return prob_plus(self.theta)

    def log_mass(self, values) -> float:
        """Log probability of one +-1 assignment."""
        v = np.asarray(values, dtype=np.float64)
        # log sigma(2*theta*x) summed, in the same safe form as prob_plus
        t = self.theta * v
        return float(np.sum(t - np.logaddexp(t, -t)))

    def __len__(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class SubsetIndex:
    """A size-s subset of [parent_size], members strictly increasing."""

    parent_size: int
    members: np.ndarray

    def __post_init__(self):
        mem = np.asarray(self.members, dtype=np.int64)
        if mem.ndim != 1 or mem.size < 1:
            raise ValueError("members must be a nonempty 1-d index list")
        if np.any(np.diff(mem) <= 0):
            raise ValueError("members must be strictly increasing")
        if mem[0] < 0 or mem[-1] >= self.parent_size:
            raise ValueError("members out of range for parent_size")
        mem = mem.copy()
        mem.setflags(write=False)
        object.__setattr__(self, "members", mem)

    @property
    def size(self) -> int:
        return self.members.size

    def complement(self) -> np.ndarray:
        comp = np.setdiff1d(np.arange(self.parent_size), self.members)
        return comp


def new_ising(J_raw, h) -> IsingModel:
    """Build a model from raw couplings: symmetrize and strip the diagonal.

    Inputs are symmetrized as (J + J^T)/2; asymmetry beyond a 1e-9 relative
    tolerance (Frobenius) is rejected rather than silently averaged away.
    """
    J_raw = np.asarray(J_raw, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if J_raw.ndim != 2 or J_raw.shape[0] != J_raw.shape[1]:
        raise ValueError(f"J_raw must be square, got shape {J_raw.shape}")
    if h.shape != (J_raw.shape[0],):
        raise ValueError(f"h has shape {h.shape}, expected ({J_raw.shape[0]},)")
    if not (np.isfinite(J_raw).all() and np.isfinite(h).all()):
        raise ValueError("J_raw and h must be finite")
    asym = np.linalg.norm(J_raw - J_raw.T)
    scale = max(np.linalg.norm(J_raw), 1e-300)
    if asym > _ASYMMETRY_RTOL * scale:
        raise ValueError(
            f"J_raw asymmetry {asym/scale:.3e} exceeds relative tolerance "
            f"{_ASYMMETRY_RTOL:.0e}")
    J = 0.5 * (J_raw + J_raw.T)
    np.fill_diagonal(J, 0.0)
    return IsingModel(J, h)


def energy(model: IsingModel, x: SpinVector) -> float:
    """0.5 * x.J.x + h.x for a full configuration."""
    if len(x) != model.n or not np.array_equal(x.indices, np.arange(model.n)):
        raise ValueError("x must cover all coordinates 0..n-1")
    v = x.values.astype(np.float64)
    return float(0.5 * v @ model.J @ v + model.h @ v)


def conditional_field(model: IsingModel, S: SubsetIndex,
                      x_comp: SpinVector) -> np.ndarray:
    """Effective field on S given the complement spins.

    Conditioned on X_{S^c} = x_comp, the law of X_S is the Ising model with
    couplings J_{SxS} and field J_{SxS^c} x_{S^c} + h_S; this returns that
    field.
    """
    if S.parent_size != model.n:
        raise ValueError("subset parent_size does not match model size")
    comp = S.complement()
    if not np.array_equal(comp, x_comp.indices):
        raise ValueError("x_comp must be indexed by exactly the complement of S")
    v = x_comp.values.astype(np.float64)
    return model.J[np.ix_(S.members, comp)] @ v + model.h[S.members]


def product_proposal(field, indices=None) -> ProductDistribution:
    """Product law q(x) proportional to exp(<field, x>)."""
    field = np.atleast_1d(np.asarray(field, dtype=np.float64))
    if not np.isfinite(field).all():
        raise ValueError("field must be finite")
    if indices is None:
        indices = np.arange(field.size)
    return ProductDistribution(indices, field)


def log_ratio_quadratic(model: IsingModel, S: SubsetIndex,
                        x_S: SpinVector) -> float:
    """0.5 * x_S . J_{SxS} . x_S, the log density ratio of the exact
    conditional over its product proposal (up to a constant)."""
    if S.parent_size != model.n:
        raise ValueError("subset parent_size does not match model size")
    if not np.array_equal(x_S.indices, S.members):
        raise ValueError("x_S must be indexed by S")
    v = x_S.values.astype(np.float64)
    Jss = model.J[np.ix_(S.members, S.members)]
    return float(0.5 * v @ Jss @ v)


def submatrix_frobenius(model: IsingModel, S: SubsetIndex) -> float:
    """Frobenius norm of J_{SxS}."""
    if S.parent_size != model.n:
        raise ValueError("subset parent_size does not match model size")
    sub = model.J[np.ix_(S.members, S.members)]
    return float(np.sqrt(np.sum(sub * sub)))


def operator_norm(model: IsingModel, tol: float, max_iters: int = 10_000) -> float:
    """Largest singular value of J by power iteration.

    Deterministic: the start vector comes from a fixed internal stream. For
    symmetric J the limit is max |eigenvalue|; convergence is declared when
    successive norm estimates agree to relative ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = model.n
    v = RngStream(0x6B674E52, path=(n,)).normals(n)
    v /= np.linalg.norm(v)
    prev = np.inf
    for _ in range(max_iters):
        w = model.J @ v
        r = np.linalg.norm(w)
        if r == 0.0:
            return 0.0
        v = w / r
        if abs(r - prev) <= tol * r:
            return float(r)
        prev = r
    raise ConvergenceError(
        f"power iteration did not reach rtol={tol} in {max_iters} iterations")


def sk_model(n: int, beta: float, seed: int) -> IsingModel:
    """Spin-glass instance: couplings i.i.d. N(0, beta^2/n) off-diagonal.

    Deterministic in ``seed``; ``beta=0`` gives the zero matrix.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    rs = RngStream(seed, path=(0x534B,))
    iu, ju = np.triu_indices(n, k=1)
    J = np.zeros((n, n))
    if beta > 0:
        J[iu, ju] = rs.normals(iu.size) * (beta / np.sqrt(n))
        J += J.T
    return IsingModel(J, np.zeros(n))


# ---------------------------------------------------------------------------
# file formats: dense CSV (row per line), sparse "i j value" triplets,
# field vectors one value per line


def load_coupling_matrix(path, size: int | None = None) -> np.ndarray:
    """Load raw couplings from a dense CSV or sparse triplet file.

    A file whose first data line contains a comma is parsed as dense CSV
    (one row per line). Otherwise each line must be ``i j value`` with
    0-based indices; the symmetric closure J[j,i] = J[i,j] is applied and
    ``size`` (or 1 + the largest index) fixes the dimension. Lines starting
    with ``#`` are ignored. All entries must be finite.
    """
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    if "," in lines[0]:
        rows = [np.fromstring(line, sep=",") for line in lines]
        widths = {row.size for row in rows}
        if len(widths) != 1 or len(rows) != widths.pop():
            raise ValueError(f"{path}: dense CSV must be square")
        J = np.vstack(rows)
    else:
        entries = []
        max_idx = -1
        for line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}: expected 'i j value', got {line!r}")
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            if i < 0 or j < 0:
                raise ValueError(f"{path}: negative index in {line!r}")
            entries.append((i, j, v))
            max_idx = max(max_idx, i, j)
        dim = size if size is not None else max_idx + 1
        if max_idx >= dim:
            raise ValueError(f"{path}: index {max_idx} exceeds size {dim}")
        J = np.zeros((dim, dim))
        for i, j, v in entries:
            J[i, j] = v
            J[j, i] = v
    if not np.isfinite(J).all():
        raise ValueError(f"{path}: non-finite matrix entries")
    return J


def load_field_vector(path, size: int | None = None) -> np.ndarray:
    """Load a field vector, one value per line (``#`` comments allowed)."""
    values = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            values.append(float(line))
    h = np.asarray(values, dtype=np.float64)
    if size is not None and h.size != size:
        raise ValueError(f"{path}: expected {size} values, found {h.size}")
    if not np.isfinite(h).all():
        raise ValueError(f"{path}: non-finite field entries")
    return h


def save_dense_csv(path, J) -> None:
    """Write couplings as dense CSV, one row per line."""
    J = np.asarray(J, dtype=np.float64)
    with open(path, "w") as fh:
        for row in J:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_field_vector(path, h) -> None:
    """Write a field vector, one value per line."""
    with open(path, "w") as fh:
        for v in np.asarray(h, dtype=np.float64):
            fh.write(repr(float(v)) + "\n")
