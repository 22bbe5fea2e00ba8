"""Brute-force oracle and spectral laboratory.

Everything here is exact (up to double precision): enumerated
distributions, dense transition matrices, divergences, the down/up
operator ladder over partial configurations, contraction coefficients,
and Monte Carlo probes for KL contraction. Sizes are capped; this module
verifies the samplers, it never replaces them.

Configuration indexing convention, shared with ``glauber.spin_table``:
configuration x maps to the integer with bit i set iff x_i = +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import svdvals
from scipy.special import logsumexp

from .glauber import spin_table
from .model import IsingModel, SpinVector, prob_plus
from .rng import RngStream

MAX_ENUM_N = 20
MAX_MATRIX_N = 14
MAX_LADDER_N = 8
MAX_SPEEDUP_N = 12
MAX_EMPIRICAL_N = 16

_ROW_SUM_ATOL = 1e-12


@dataclass(frozen=True)
class ExactDistribution:
    """Exact probabilities over all 2^n configurations."""

    n: int
    probabilities: np.ndarray
    log_partition: float


@dataclass(frozen=True)
class Divergences:
    tv: float
    kl: float
    chi2: float


@dataclass(frozen=True)
class TvEstimate:
    tv_hat: float
    conf_radius: float
    sample_count: int


@dataclass(frozen=True)
class KSpeedupCheck:
    lambda2_k: float
    bound: float
    poincare_c: float
    slack: float


def _spin_block(lo: int, hi: int, n: int) -> np.ndarray:
    r = np.arange(lo, hi, dtype=np.int64)
    bits = (r[:, None] >> np.arange(n)) & 1
    return np.where(bits == 1, 1.0, -1.0)


def enumerate_distribution(model: IsingModel) -> ExactDistribution:
    """Exact mu_{J,h} by summing all 2^n weights (log-sum-exp)."""
    n = model.n
    if n > MAX_ENUM_N:
        raise ValueError(f"n={n} too large to enumerate (max {MAX_ENUM_N})")
    total = 1 << n
    logw = np.empty(total)
    chunk = 1 << min(n, 16)
    for lo in range(0, total, chunk):
        X = _spin_block(lo, min(lo + chunk, total), n)
        logw[lo:lo + X.shape[0]] = (
            0.5 * np.einsum("si,ij,sj->s", X, model.J, X) + X @ model.h)
    log_z = float(logsumexp(logw))
    return ExactDistribution(n, np.exp(logw - log_z), log_z)


def config_indices(values: np.ndarray) -> np.ndarray:
    """Map (N, n) +-1 arrays to configuration integers."""
    values = np.atleast_2d(values)
    n = values.shape[1]
    return (values > 0).astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))


def sample_from_distribution(dist: ExactDistribution, rng: RngStream,
                             count: int) -> np.ndarray:
    """Inverse-CDF iid samples as an (count, n) +-1 int8 array."""
    cdf = np.cumsum(dist.probabilities)
    pos = np.searchsorted(cdf, rng.uniforms(count), side="right")
    pos = np.minimum(pos, dist.probabilities.size - 1)
    return spin_table(dist.n)[pos].astype(np.int8)


def _as_probs(p) -> np.ndarray:
    if isinstance(p, ExactDistribution):
        return p.probabilities
    return np.asarray(p, dtype=np.float64)


def divergences(p, q) -> Divergences:
    """TV, KL and chi-square divergences of p from q (requires q > 0
    wherever p > 0 for KL and chi-square)."""
    p = _as_probs(p)
    q = _as_probs(q)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal support size")
    tv = 0.5 * float(np.sum(np.abs(p - q)))
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise ValueError("q must be positive wherever p is (support violation)")
    kl = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    qmask = q > 0
    chi2 = float(np.sum((p[qmask] - q[qmask]) ** 2 / q[qmask]))
    return Divergences(tv=tv, kl=kl, chi2=chi2)


@dataclass(frozen=True)
class MarkovMatrix:
    """Row-stochastic kernel with source/target measure annotations."""

    matrix: np.ndarray
    source_measure: np.ndarray
    target_measure: np.ndarray

    def __post_init__(self):
        M = self.matrix
        if M.ndim != 2:
            raise ValueError("matrix must be 2-d")
        if M.shape != (self.source_measure.size, self.target_measure.size):
            raise ValueError("measure annotations do not match matrix shape")
        if float(M.min(initial=0.0)) < 0.0:
            raise ValueError("negative transition probability")
        rows = M.sum(axis=1)
        err = float(np.max(np.abs(rows - 1.0)))
        if err > 100 * _ROW_SUM_ATOL:
            raise ValueError(f"rows must sum to 1 (max error {err:.2e})")

    @property
    def is_square(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]

    def compose(self, other: "MarkovMatrix") -> "MarkovMatrix":
        return MarkovMatrix(self.matrix @ other.matrix, self.source_measure,
                            other.target_measure)


def _symmetrized(P: MarkovMatrix) -> np.ndarray:
    mu = P.source_measure
    if np.any(mu <= 0):
        raise ValueError("stationary measure must be positive")
    root = np.sqrt(mu)
    sym = (root[:, None] * P.matrix) / root[None, :]
    return 0.5 * (sym + sym.T)


def _check_reversible(P: MarkovMatrix, atol: float) -> None:
    mu = P.source_measure
    flow = mu[:, None] * P.matrix
    resid = float(np.max(np.abs(flow - flow.T)))
    if resid > atol:
        raise ValueError(f"kernel is not reversible for its stationary "
                         f"annotation (residual {resid:.2e})")


def lambda2(P: MarkovMatrix) -> float:
    """Second-largest eigenvalue of a reversible square kernel."""
    if not P.is_square:
        raise ValueError("second eigenvalue needs a square kernel")
    if P.matrix.shape[0] == 1:
        return 0.0
    vals = np.linalg.eigvalsh(_symmetrized(P))
    return float(vals[-2])


def spectral_gap(P: MarkovMatrix, reversibility_atol: float = 1e-8) -> float:
    """1 - lambda_2 via the mu-weighted symmetrization.

    A one-state chain has gap 1 by convention (no second eigenvalue; the
    chain is a rank-one projection).
    """
    if not P.is_square:
        raise ValueError("spectral gap needs a square kernel")
    if P.matrix.shape[0] == 1:
        return 1.0
    _check_reversible(P, reversibility_atol)
    return 1.0 - lambda2(P)


def stationarity_residual(P: MarkovMatrix) -> float:
    """max |mu P - mu| for the annotated stationary measure."""
    mu = P.source_measure
    return float(np.max(np.abs(mu @ P.matrix - mu)))


# ---------------------------------------------------------------------------
# exact chain transition matrices


def glauber_transition_matrix(model: IsingModel,
                              dist: ExactDistribution | None = None) -> MarkovMatrix:
    """Exact 2^n x 2^n single-site resampling kernel."""
    n = model.n
    if n > MAX_MATRIX_N:
        raise ValueError(f"n={n} too large for a dense kernel (max {MAX_MATRIX_N})")
    dist = dist or enumerate_distribution(model)
    N = 1 << n
    X = spin_table(n)
    idx = np.arange(N)
    P = np.zeros((N, N))
    for i in range(n):
        theta = X @ model.J[:, i] + model.h[i]
        p = prob_plus(theta)
        up = idx | (1 << i)
        down = idx & ~(1 << i)
        P[idx, up] += p / n
        P[idx, down] += (1.0 - p) / n
    return MarkovMatrix(P, dist.probabilities, dist.probabilities)


def k_glauber_transition_matrix(model: IsingModel, k: int,
                                dist: ExactDistribution | None = None) -> MarkovMatrix:
    """Exact kernel resampling a uniform size-k subset from its conditional."""
    n = model.n
    if n > MAX_MATRIX_N:
        raise ValueError(f"n={n} too large for a dense kernel (max {MAX_MATRIX_N})")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    dist = dist or enumerate_distribution(model)
    probs = dist.probabilities
    N = 1 << n
    idx = np.arange(N)
    P = np.zeros((N, N))
    n_subsets = math.comb(n, k)
    for members in combinations(range(n), k):
        mask = 0
        for i in members:
            mask |= 1 << i
        gid = idx & ~mask
        blocks = idx[np.argsort(gid, kind="stable")].reshape(-1, 1 << k)
        w = probs[blocks]
        w = w / w.sum(axis=1, keepdims=True)
        P[blocks[:, :, None], blocks[:, None, :]] += w[:, None, :] / n_subsets
    return MarkovMatrix(P, probs, probs)


# ---------------------------------------------------------------------------
# partial-configuration ladder (homogenized levels)


@dataclass(frozen=True)
class PartialConfigSpace:
    """Level-m states (A, x_A): a size-m index subset plus an assignment.

    States are ordered lexicographically by (subset bitmask, assignment
    bits); state index = subset_rank * 2^m + assignment. Assignment bit j
    is the spin of the j-th smallest member of A (+1 iff set). The measure
    is mu(X_A = x_A) / C(n, m), which sums to 1 over the level.
    """

    n: int
    m: int
    subset_members: np.ndarray  # (num_subsets, m) sorted rows, ascending masks
    subset_masks: np.ndarray
    measure: np.ndarray

    @property
    def num_states(self) -> int:
        return self.measure.size

    def mask_rank(self) -> dict[int, int]:
        return {int(mask): r for r, mask in enumerate(self.subset_masks)}


def build_partial_space(model: IsingModel, m: int,
                        dist: ExactDistribution | None = None) -> PartialConfigSpace:
    """Enumerate level m of the ladder with its exact measure."""
    n = model.n
    if n > MAX_LADDER_N:
        raise ValueError(f"n={n} too large for ladders (max {MAX_LADDER_N})")
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}")
    dist = dist or enumerate_distribution(model)
    idx = np.arange(1 << n, dtype=np.int64)
    combos = sorted(combinations(range(n), m),
                    key=lambda c: sum(1 << i for i in c))
    members = np.array(combos, dtype=np.int64).reshape(len(combos), m)
    masks = np.array([sum(1 << int(i) for i in row) for row in members],
                     dtype=np.int64)
    n_subsets = math.comb(n, m)
    measure = np.empty(n_subsets << m)
    for r in range(n_subsets):
        local = np.zeros(1 << n, dtype=np.int64)
        for j in range(m):
            local |= ((idx >> members[r, j]) & 1) << j
        marginal = np.bincount(local, weights=dist.probabilities,
                               minlength=1 << m)
        measure[r << m:(r + 1) << m] = marginal / n_subsets
    return PartialConfigSpace(n, m, members, masks, measure)


def _drop_bit(bits: np.ndarray, j: int) -> np.ndarray:
    low = bits & ((1 << j) - 1)
    high = (bits >> (j + 1)) << j
    return high | low


def down_operator(space: PartialConfigSpace,
                  lower: PartialConfigSpace | None = None) -> MarkovMatrix:
    """Erase one uniformly chosen element: level m -> level m-1.

    When ``lower`` is omitted the target measure is computed as mu_m D.
    """
    m = space.m
    if m < 1:
        raise ValueError("level-0 space has no down operator")
    n = space.n
    lower_members = sorted(combinations(range(n), m - 1),
                           key=lambda c: sum(1 << i for i in c))
    lower_rank = {sum(1 << int(i) for i in c): r
                  for r, c in enumerate(lower_members)}
    rows_per_subset = 1 << m
    bits = np.arange(rows_per_subset, dtype=np.int64)
    D = np.zeros((space.num_states, len(lower_members) << (m - 1)))
    for r in range(space.subset_masks.size):
        mask = int(space.subset_masks[r])
        row0 = r << m
        for j in range(m):
            member = int(space.subset_members[r, j])
            child_rank = lower_rank[mask & ~(1 << member)]
            cols = (child_rank << (m - 1)) | _drop_bit(bits, j)
            D[row0 + bits, cols] += 1.0 / m
    target = space.measure @ D if lower is None else lower.measure
    return MarkovMatrix(D, space.measure, target)


def up_operator(model: IsingModel, lower: PartialConfigSpace,
                upper: PartialConfigSpace | None = None) -> MarkovMatrix:
    """Restore one element proportionally to the level-(m+1) measure."""
    if upper is None:
        upper = build_partial_space(model, lower.m + 1)
    if upper.m != lower.m + 1 or upper.n != lower.n:
        raise ValueError("spaces must be adjacent levels of one ladder")
    m = upper.m
    lower_rank = lower.mask_rank()
    bits = np.arange(1 << m, dtype=np.int64)
    low_idx_parts = []
    up_idx_parts = []
    for r in range(upper.subset_masks.size):
        mask = int(upper.subset_masks[r])
        row0 = r << m
        for j in range(m):
            member = int(upper.subset_members[r, j])
            child_rank = lower_rank[mask & ~(1 << member)]
            low_idx_parts.append((child_rank << (m - 1)) | _drop_bit(bits, j))
            up_idx_parts.append(row0 + bits)
    low_idx = np.concatenate(low_idx_parts)
    up_idx = np.concatenate(up_idx_parts)
    denom = np.zeros(lower.num_states)
    np.add.at(denom, low_idx, upper.measure[up_idx])
    U = np.zeros((lower.num_states, upper.num_states))
    U[low_idx, up_idx] = upper.measure[up_idx] / denom[low_idx]
    return MarkovMatrix(U, lower.measure, upper.measure)


def full_ladder(model: IsingModel):
    """All spaces and adjacent operators: returns (dist, spaces, downs, ups)
    with downs[m]: m -> m-1 and ups[m]: m-1 -> m."""
    dist = enumerate_distribution(model)
    spaces = {m: build_partial_space(model, m, dist)
              for m in range(model.n + 1)}
    downs = {m: down_operator(spaces[m], spaces[m - 1])
             for m in range(1, model.n + 1)}
    ups = {m: up_operator(model, spaces[m - 1], spaces[m])
           for m in range(1, model.n + 1)}
    return dist, spaces, downs, ups


def down_up_walk(model: IsingModel, m: int, ladder=None) -> MarkovMatrix:
    """The level-m walk that erases one element and restores it."""
    if ladder is None:
        dist = enumerate_distribution(model)
        upper = build_partial_space(model, m, dist)
        lower = build_partial_space(model, m - 1, dist)
        return down_operator(upper, lower).compose(
            up_operator(model, lower, upper))
    _, _, downs, ups = ladder
    return downs[m].compose(ups[m])


def chi2_down_contraction(model: IsingModel, m: int, ladder=None) -> float:
    """Variance-contraction deficit of the level-m down operator.

    Equals the spectral gap of the level-m down-up walk: the walk is
    D D^* in the mu_m-weighted geometry, so its eigenvalues are squared
    singular values of the weighted down operator and the chi-square
    contraction factor of D is exactly lambda_2 of the walk.
    """
    if ladder is None:
        dist = enumerate_distribution(model)
        upper = build_partial_space(model, m, dist)
        lower = build_partial_space(model, m - 1, dist)
        D = down_operator(upper, lower)
    else:
        D = ladder[2][m]
    root_up = np.sqrt(D.source_measure)
    root_low = np.sqrt(D.target_measure)
    weighted = (root_up[:, None] * D.matrix) / root_low[None, :]
    sig = svdvals(weighted)
    if abs(sig[0] - 1.0) > 1e-9:
        raise ValueError(f"leading singular value {sig[0]} != 1; "
                         "inconsistent measures")
    if sig.size == 1:
        return 1.0
    return float(1.0 - sig[1] ** 2)


def contraction_lower_bound(kappa_n: float, n: int, m: int) -> float:
    """Monotonicity floor for the level-m deficit given the level-n one:
    n*kappa_n*kbl / (n*kappa_n + m*kbl) with kbl the uniform-structure gap."""
    kbl = bernoulli_laplace_gap(n, m)
    return n * kappa_n * kbl / (n * kappa_n + m * kbl)


def kl_contraction_probe(model: IsingModel, m: int, trials: int,
                         rng: RngStream, ladder=None,
                         alphas=(0.1, 1.0, 10.0)) -> float:
    """Max observed KL(nu D || mu_{m-1}) / KL(nu || mu_m) over random nu.

    Probes are point masses, point-mass mixtures and Dirichlet
    perturbations of mu_m. A probe can only find violations of a claimed
    contraction level; it cannot certify one.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if ladder is None:
        dist = enumerate_distribution(model)
        upper = build_partial_space(model, m, dist)
        lower = build_partial_space(model, m - 1, dist)
        D = down_operator(upper, lower)
    else:
        D = ladder[2][m]
    mu_m = D.source_measure
    mu_low = D.target_measure
    K = mu_m.size
    nrng = np.random.default_rng(rng.key)
    weights = (0.5, 0.9, 0.99)
    best = 0.0
    for t in range(trials):
        kind = t % 4
        if kind == 0:
            nu = np.zeros(K)
            nu[(t // 4) % K] = 1.0
        elif kind == 1:
            nu = mu_m.copy() * (1.0 - weights[t % 3])
            nu[nrng.integers(K)] += weights[t % 3]
        else:
            alpha = alphas[t % len(alphas)]
            nu = nrng.dirichlet(np.maximum(alpha * K * mu_m, 1e-3))
        kl_top = divergences(nu, mu_m).kl
        if kl_top < 1e-12:
            continue
        kl_bot = divergences(nu @ D.matrix, mu_low).kl
        ratio = kl_bot / kl_top
        if ratio > best:
            best = ratio
    return best


def verify_k_speedup(model: IsingModel, k: int) -> KSpeedupCheck:
    """Check lambda_2 of the k-subset chain against the speedup bound
    (1 - k/(n+1))^(1/(C+1)), with C read off the exact single-site gap."""
    n = model.n
    if n > MAX_SPEEDUP_N:
        raise ValueError(f"n={n} too large (max {MAX_SPEEDUP_N})")
    dist = enumerate_distribution(model)
    gap1 = spectral_gap(glauber_transition_matrix(model, dist))
    c_poincare = 1.0 / (n * gap1)
    lam = lambda2(k_glauber_transition_matrix(model, k, dist))
    bound = (1.0 - k / (n + 1.0)) ** (1.0 / (c_poincare + 1.0))
    return KSpeedupCheck(lambda2_k=lam, bound=bound, poincare_c=c_poincare,
                         slack=bound - lam)


# ---------------------------------------------------------------------------
# uniform subset structure (no spin values): the classical two-urn walk


def bernoulli_laplace_gap(n: int, k: int) -> float:
    """Exact spectral gap n / (k (n-k+1)) of the uniform subset down-up walk."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    return n / (k * (n - k + 1.0))


def subset_down_up(n: int, k: int) -> MarkovMatrix:
    """Down-up walk on uniformly weighted size-k subsets of [n]."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    if n > 14:
        raise ValueError(f"n={n} too large for the dense subset walk")
    upper = sorted(combinations(range(n), k),
                   key=lambda c: sum(1 << i for i in c))
    lower = sorted(combinations(range(n), k - 1),
                   key=lambda c: sum(1 << i for i in c))
    lower_rank = {c: r for r, c in enumerate(lower)}
    D = np.zeros((len(upper), len(lower)))
    U = np.zeros((len(lower), len(upper)))
    upper_rank = {c: r for r, c in enumerate(upper)}
    for r, c in enumerate(upper):
        for drop in range(k):
            child = c[:drop] + c[drop + 1:]
            D[r, lower_rank[child]] += 1.0 / k
    for r, c in enumerate(lower):
        present = set(c)
        for add in range(n):
            if add in present:
                continue
            parent = tuple(sorted(c + (add,)))
            U[r, upper_rank[parent]] = 1.0 / (n - k + 1)
    mu_up = np.full(len(upper), 1.0 / len(upper))
    mu_low = np.full(len(lower), 1.0 / len(lower))
    return MarkovMatrix(D, mu_up, mu_low).compose(
        MarkovMatrix(U, mu_low, mu_up))


# ---------------------------------------------------------------------------
# empirical distributions


def _as_value_matrix(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return np.atleast_2d(samples)
    return np.vstack([s.values if isinstance(s, SpinVector) else s
                      for s in samples])


def empirical_distribution(samples) -> np.ndarray:
    """Histogram over all 2^n configurations, normalized to mass 1."""
    values = _as_value_matrix(samples)
    n = values.shape[1]
    if n > MAX_EMPIRICAL_N:
        raise ValueError(f"n={n} too large to histogram (max {MAX_EMPIRICAL_N})")
    counts = np.bincount(config_indices(values), minlength=1 << n)
    return counts / values.shape[0]


def empirical_tv(samples, exact: ExactDistribution) -> TvEstimate:
    """TV of the sample histogram from the exact law, with the
    sqrt(2^n / N) concentration envelope."""
    values = _as_value_matrix(samples)
    if values.shape[1] != exact.n:
        raise ValueError("sample dimension does not match the distribution")
    hist = empirical_distribution(values)
    tv = 0.5 * float(np.sum(np.abs(hist - exact.probabilities)))
    radius = math.sqrt((1 << exact.n) / values.shape[0])
    return TvEstimate(tv_hat=tv, conf_radius=radius,
                      sample_count=values.shape[0])
