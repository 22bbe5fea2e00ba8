"""Self-check suites behind the ``verify`` CLI subcommand.

Each suite returns a list of named pass/fail results; they are smoke-level
versions of the full test suite, sized by ``n_max`` so a user can sanity
check an installation in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exact
from .model import IsingModel, new_ising, product_proposal
from .parallel import SamplerConfig, default_config, run_replicas
from .rejection import approx_rejection_sample, rejection_diagnostics
from .rng import RngStream
from .sampling import sample_product

SUITES = ("operators", "spectra", "rejection", "end2end", "all")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_model(n: int, target_norm: float, seed: int,
                  field_scale: float = 0.3) -> IsingModel:
    rs = RngStream(seed, path=(0x7261,))
    A = rs.normals(n * n).reshape(n, n)
    A = 0.5 * (A + A.T)
    np.fill_diagonal(A, 0.0)
    A *= target_norm / np.linalg.norm(A, 2)
    return new_ising(A, rs.normals(n) * field_scale)


def suite_operators(n_max: int, seed: int) -> list[CheckResult]:
    results = []
    for n in range(3, min(n_max, 6) + 1):
        model = _random_model(n, 0.6, seed + n)
        dist, spaces, downs, ups = exact.full_ladder(model)
        rs = RngStream(seed, path=(n,))
        comp_err = flow_err = adj_err = stat_err = 0.0
        for m in range(1, n + 1):
            D, U = downs[m], ups[m]
            flow_err = max(flow_err, float(np.max(np.abs(
                spaces[m].measure @ D.matrix - spaces[m - 1].measure))))
            f = rs.normals(spaces[m - 1].num_states)
            g = rs.normals(spaces[m].num_states)
            lhs = float(np.sum(spaces[m].measure * (D.matrix @ f) * g))
            rhs = float(np.sum(spaces[m - 1].measure * f * (U.matrix @ g)))
            adj_err = max(adj_err, abs(lhs - rhs))
            walk = D.compose(U)
            stat_err = max(stat_err, exact.stationarity_residual(walk))
        for m in range(2, n + 1):
            two = downs[m].compose(downs[m - 1]).matrix
            nonzero = two[two > 1e-15]
            comp_err = max(comp_err, float(np.max(np.abs(
                nonzero - 1.0 / math.comb(m, 2)))))
        results.append(CheckResult(
            f"operators n={n} marginal flow mu_m D = mu_(m-1)",
            flow_err < 1e-13, f"max residual {flow_err:.2e}"))
        results.append(CheckResult(
            f"operators n={n} adjointness <Df,g> = <f,Ug>",
            adj_err < 1e-10, f"max residual {adj_err:.2e}"))
        results.append(CheckResult(
            f"operators n={n} down-up stationarity",
            stat_err < 1e-10, f"max residual {stat_err:.2e}"))
        results.append(CheckResult(
            f"operators n={n} two-level composition uniform 1/C(m,2)",
            comp_err < 1e-13, f"max deviation {comp_err:.2e}"))
    return results


def suite_spectra(n_max: int, seed: int) -> list[CheckResult]:
    results = []
    worst = 0.0
    for n in range(1, min(n_max, 10) + 1):
        for k in range(1, n + 1):
            gap = exact.spectral_gap(exact.subset_down_up(n, k))
            worst = max(worst, abs(gap - exact.bernoulli_laplace_gap(n, k)))
    results.append(CheckResult(
        f"uniform subset walk gap equals n/(k(n-k+1)) for n<={min(n_max, 10)}",
        worst < 1e-10, f"max |eig-formula| {worst:.2e}"))

    n = min(n_max, 6)
    model = _random_model(n, 0.7, seed)
    ladder = exact.full_ladder(model)
    consistency = 0.0
    mono_ok = True
    kappa = {m: exact.chi2_down_contraction(model, m, ladder)
             for m in range(1, n + 1)}
    for m in range(1, n + 1):
        gap = exact.spectral_gap(exact.down_up_walk(model, m, ladder))
        consistency = max(consistency, abs(gap - kappa[m]))
        if kappa[m] < exact.contraction_lower_bound(kappa[n], n, m) - 1e-9:
            mono_ok = False
    results.append(CheckResult(
        f"squared-singular-value route matches eigensolve (n={n})",
        consistency < 1e-10, f"max difference {consistency:.2e}"))
    results.append(CheckResult(
        f"down-operator contraction monotone in level (n={n})",
        mono_ok, f"kappa_n={kappa[n]:.4f}"))

    speed_ok = True
    detail = ""
    check_n = min(n_max, 7)
    model = _random_model(check_n, 0.6, seed + 1)
    for k in range(1, check_n + 1):
        chk = exact.verify_k_speedup(model, k)
        detail = f"last: lambda2={chk.lambda2_k:.4f} bound={chk.bound:.4f}"
        if chk.lambda2_k > chk.bound + 1e-9:
            speed_ok = False
    results.append(CheckResult(
        f"k-subset chain eigenvalue within speedup bound (n={check_n}, all k)",
        speed_ok, detail))
    return results


def suite_rejection(seed: int) -> list[CheckResult]:
    results = []
    rs = RngStream(seed, path=(0x72,))

    q = product_proposal(np.zeros(3))
    out = approx_rejection_sample(lambda r: sample_product(r, q),
                                  lambda x: 0.0, 1.0, rs.split(0), 10)
    results.append(CheckResult(
        "g=0, c=1 accepts on the first try",
        out.tries == 1 and out.accepted_log_ratio == 0.0, f"tries={out.tries}"))

    theta = np.array([0.4, -0.2])
    q = product_proposal(theta)
    A = np.array([[0.0, 0.35], [0.35, 0.0]])

    def g(x):
        v = x.values.astype(float)
        return 0.5 * v @ A @ v

    c = 2.0
    trials = 20000
    diag = rejection_diagnostics(lambda r: sample_product(r, q), g, c,
                                 trials, rs.split(1))
    ok_accept = diag.p_accept_hat + 3 * diag.p_accept_se >= 1.0 / (2 * c)
    results.append(CheckResult(
        "acceptance rate at least 1/(2c)", ok_accept,
        f"p_hat={diag.p_accept_hat:.4f} vs {1/(2*c):.4f}"))

    # exact output law vs the min(R,c) formula on the 4-point support
    X = np.array([[-1., -1.], [1., -1.], [-1., 1.], [1., 1.]])
    qm = np.exp(X @ theta)
    qm /= qm.sum()
    gv = 0.5 * np.einsum("si,ij,sj->s", X, A, X)
    ratio = np.exp(gv[:, None] - gv[None, :])
    accept = np.minimum(ratio / c, 1.0)
    p_hat_exact = qm * (accept @ qm)
    p_hat_exact /= p_hat_exact.sum()
    counts = np.zeros(4)
    runs = 20000
    for t in range(runs):
        o = approx_rejection_sample(lambda r: sample_product(r, q), g, c,
                                    rs.split(2).split(t), 1000)
        v = o.sample.values
        counts[int(v[0] > 0) + 2 * int(v[1] > 0)] += 1
    tv = 0.5 * np.abs(counts / runs - p_hat_exact).sum()
    results.append(CheckResult(
        "sampler output matches exact accepted law",
        tv < 0.02, f"TV(empirical, exact)={tv:.4f} at {runs} runs"))
    return results


def suite_end2end(n_max: int, seed: int) -> list[CheckResult]:
    results = []
    n = min(n_max, 10)
    model = _random_model(n, 0.5, seed, field_scale=0.1)
    dist = exact.enumerate_distribution(model)
    eps = 0.1
    runs = 20000
    frob = float(np.linalg.norm(model.J))
    configs = {
        "single-leaf root": SamplerConfig(c1=0.125, c3=2 * frob, C2=16,
                                          C4=4, eps=eps, threads=2),
        "forced recursion": SamplerConfig(c1=0.025, c3=0.05, C2=16, C4=4,
                                          eps=eps, threads=2),
    }
    for name, cfg in configs.items():
        samples = run_replicas(model, cfg, RngStream(seed, path=(0xE2,)), runs)
        est = exact.empirical_tv(samples, dist)
        bound = eps + 3 * est.conf_radius
        results.append(CheckResult(
            f"end2end n={n} {name} TV within eps + 3*conf",
            est.tv_hat <= bound,
            f"tv_hat={est.tv_hat:.4f} bound={bound:.4f} ({runs} runs)"))
    return results


def run_suite(suite: str, n_max: int, seed: int) -> list[CheckResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    results = []
    if suite in ("operators", "all"):
        results += suite_operators(n_max, seed)
    if suite in ("spectra", "all"):
        results += suite_spectra(n_max, seed)
    if suite in ("rejection", "all"):
        results += suite_rejection(seed)
    if suite in ("end2end", "all"):
        results += suite_end2end(n_max, seed)
    return results
