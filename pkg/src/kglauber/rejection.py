"""Two-sample approximate rejection sampling.

Targets P with dP/dQ proportional to exp(g) when only Q can be sampled and
only g evaluated (normalizers unknown). Each attempt draws X, Z ~ Q
independently, forms the ratio R = exp(g(X) - g(Z)) against the reference
draw Z, and accepts X when U <= R/c. The output law satisfies
dPhat/dQ(x) = E[min(R,c) | X=x] / E[min(R,c)], the acceptance probability
is E[min(R,c)]/c >= 1/(2c), and TV(Phat, P) <= E[(R-c) 1{R>=c}] / E[R].

Attempt j draws from ``rng.split(j)`` (X from child 0, Z from child 1,
U from child 2), so first-accept semantics are a pure function of the
stream and attempts may be evaluated speculatively in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MaxTriesExceeded
from .rng import RngStream


@dataclass(frozen=True)
class RejectionOutcome:
    sample: object
    tries: int
    accepted_log_ratio: float


@dataclass(frozen=True)
class RejectionDiagnostics:
    """Monte Carlo estimates of the acceptance rate and the TV bound."""

    p_accept_hat: float
    p_accept_se: float
    tv_bound_hat: float
    tv_bound_se: float
    mean_ratio: float
    trials: int


def default_max_tries(c: float, n: int, eps: float) -> int:
    """Try budget ceil(40*c*ln(n/eps)): the geometric tail beyond it is
    astronomically small when c is calibrated."""
    return int(math.ceil(40.0 * c * math.log(n / eps)))


def approx_rejection_sample(proposal, g, c: float, rng: RngStream,
                            max_tries: int) -> RejectionOutcome:
    """First accepted X from the two-sample scheme.

    ``proposal`` maps an RngStream to a sample; ``g`` maps a sample to its
    log density ratio (up to an additive constant). The acceptance test is
    done in log space: ln U <= g(X) - g(Z) - ln c.
    """
    if c < 1.0:
        raise ValueError(f"cutoff c must be >= 1, got {c}")
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    log_c = math.log(c)
    for j in range(max_tries):
        attempt = rng.split(j)
        x = proposal(attempt.split(0))
        z = proposal(attempt.split(1))
        log_ratio = float(g(x)) - float(g(z))
        u = attempt.split(2).uniform()
        if math.log(u) <= log_ratio - log_c:
            return RejectionOutcome(sample=x, tries=j + 1,
                                    accepted_log_ratio=log_ratio)
    raise MaxTriesExceeded(
        f"no acceptance in {max_tries} tries at cutoff c={c}; "
        "the cutoff or the leaf threshold is miscalibrated")


def rejection_diagnostics(proposal, g, c: float, trials: int,
                          rng: RngStream) -> RejectionDiagnostics:
    """Estimate p_accept = E[min(R,c)]/c and the TV bound
    E[(R-c)1{R>=c}]/E[R] with standard errors (delta method for the ratio).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if c < 1.0:
        raise ValueError(f"cutoff c must be >= 1, got {c}")
    log_ratio = np.empty(trials)
    for t in range(trials):
        attempt = rng.split(t)
        x = proposal(attempt.split(0))
        z = proposal(attempt.split(1))
        log_ratio[t] = float(g(x)) - float(g(z))
    ratio = np.exp(np.minimum(log_ratio, 700.0))
    min_rc = np.minimum(ratio, c)
    excess = np.maximum(ratio - c, 0.0)
    p_hat = float(np.mean(min_rc)) / c
    p_se = float(np.std(min_rc, ddof=1)) / (c * math.sqrt(trials))
    mean_r = float(np.mean(ratio))
    tv_hat = float(np.mean(excess)) / mean_r
    # influence function of the ratio estimator A/B
    infl = (excess - tv_hat * ratio) / mean_r
    tv_se = float(np.std(infl, ddof=1)) / math.sqrt(trials)
    return RejectionDiagnostics(p_accept_hat=p_hat, p_accept_se=p_se,
                                tv_bound_hat=tv_hat, tv_bound_se=tv_se,
                                mean_ratio=mean_r, trials=trials)
