"""Reference chains against the enumeration oracle."""

import math

import numpy as np
import pytest

import kglauber as kg
from kglauber import exact
from kglauber.glauber import (ChainState, glauber_step, k_glauber_step_exact,
                              run_chain, run_chain_batch,
                              site_flip_probability, spin_table)
from kglauber.rng import RngStream

from helpers import random_model, tv


def _assemble_step_matrix(model):
    """Transition matrix implied by the step's own flip probabilities."""
    n = model.n
    N = 1 << n
    P = np.zeros((N, N))
    X = spin_table(n)
    for s in range(N):
        for i in range(n):
            p = site_flip_probability(model, X[s].astype(np.int8), i)
            P[s, s | (1 << i)] += p / n
            P[s, s & ~(1 << i)] += (1 - p) / n
    return P


def test_uniform_marginals_after_burn_in():
    model = kg.new_ising(np.zeros((4, 4)), np.zeros(4))
    finals = run_chain_batch(model, steps=60, rng=RngStream(1), replicas=5000)
    freqs = np.mean(finals > 0, axis=0)
    sigma = 0.5 / math.sqrt(5000)
    assert np.all(np.abs(freqs - 0.5) < 3 * sigma), freqs


def test_two_spin_long_run_tv():
    J = np.zeros((2, 2))
    J[0, 1] = J[1, 0] = 0.5
    model = kg.new_ising(J, np.zeros(2))
    dist = exact.enumerate_distribution(model)
    rng = RngStream(7)
    state = ChainState(kg.SpinVector.full([1, -1]))
    visits = np.zeros(4)
    steps = 1_000_000
    for _ in range(steps):
        state = glauber_step(model, state, rng)
        visits[exact.config_indices(state.x.values[None, :])[0]] += 1
    assert tv(visits / steps, dist.probabilities) <= 0.01


def test_assembled_matrix_matches_oracle():
    model = random_model(4, 0.7, seed=3)
    oracle = exact.glauber_transition_matrix(model).matrix
    assembled = _assemble_step_matrix(model)
    assert np.max(np.abs(oracle - assembled)) < 1e-12


def test_detailed_balance_of_assembled_matrix():
    model = random_model(4, 0.8, seed=4)
    mu = exact.enumerate_distribution(model).probabilities
    P = _assemble_step_matrix(model)
    flow = mu[:, None] * P
    assert np.max(np.abs(flow - flow.T)) < 1e-12


def test_chain_kernel_single_step_matches_matrix_row():
    model = random_model(4, 0.6, seed=5)
    P = exact.glauber_transition_matrix(model).matrix
    # fixed start: all -1 is configuration index 0
    from kglauber import _kernels
    reps = 50_000
    counts = np.zeros(16)
    x = np.empty(4)
    for r in range(reps):
        x[:] = -1.0
        _kernels.glauber_chain(model.J, model.h, x, np.uint64(RngStream(9).split(r).key), 0, 1)
        counts[exact.config_indices(np.where(x > 0, 1, -1)[None, :])[0]] += 1
    assert tv(counts / reps, P[0]) <= 0.01


def test_k_glauber_k1_matrix_equals_glauber():
    model = random_model(4, 0.7, seed=6)
    P1 = exact.glauber_transition_matrix(model).matrix
    Pk = exact.k_glauber_transition_matrix(model, 1).matrix
    assert np.max(np.abs(P1 - Pk)) < 1e-12


def test_k_glauber_step_matches_matrix_row_intermediate_k():
    model = random_model(5, 0.7, seed=8)
    Pk = exact.k_glauber_transition_matrix(model, 2).matrix
    start = kg.SpinVector.full(np.array([1, -1, 1, 1, -1], dtype=np.int8))
    row = Pk[exact.config_indices(start.values[None, :])[0]]
    rng = RngStream(11)
    reps = 100_000
    counts = np.zeros(32)
    for _ in range(reps):
        out = k_glauber_step_exact(model, ChainState(start), 2, rng)
        counts[exact.config_indices(out.x.values[None, :])[0]] += 1
    assert tv(counts / reps, row) <= 0.01


def test_k_glauber_full_resample_is_exact():
    model = random_model(8, 0.5, seed=9)
    dist = exact.enumerate_distribution(model)
    start = kg.SpinVector.full(np.ones(8, dtype=np.int8))
    rng = RngStream(12)
    reps = 1_000_000
    values = np.empty((reps, 8), dtype=np.int8)
    state = ChainState(start)
    for r in range(reps):
        values[r] = k_glauber_step_exact(model, state, 8, rng).x.values
    est = exact.empirical_tv(values, dist)
    assert est.tv_hat <= 0.01, est


def test_k_glauber_conditional_factorizes_when_j_zero():
    h = np.array([0.3, -0.4, 0.1, 0.8])
    model = kg.new_ising(np.zeros((4, 4)), h)
    rng = RngStream(13)
    reps = 100_000
    values = np.empty((reps, 4), dtype=np.int8)
    state = ChainState(kg.SpinVector.full(np.ones(4, dtype=np.int8)))
    for r in range(reps):
        values[r] = k_glauber_step_exact(model, state, 4, rng).x.values
    emp = exact.empirical_distribution(values)
    p = kg.prob_plus(h)
    X = spin_table(4)
    product = np.prod(np.where(X > 0, p, 1 - p), axis=1)
    assert tv(emp, product) <= 0.01


def test_k_glauber_stationarity():
    model = random_model(7, 0.7, seed=10)
    mu = exact.enumerate_distribution(model).probabilities
    for k in (1, 2, 3, 4):
        P = exact.k_glauber_transition_matrix(model, k).matrix
        assert np.max(np.abs(mu @ P - mu)) < 1e-10


def test_k_glauber_size_guard():
    model = random_model(4, 0.5, seed=11)
    state = ChainState(kg.SpinVector.full(np.ones(4, dtype=np.int8)))
    with pytest.raises(ValueError):
        k_glauber_step_exact(model, state, 5, RngStream(0))


def test_run_chain_zero_steps_and_determinism():
    model = random_model(6, 0.5, seed=12)
    x0 = kg.SpinVector.full(np.ones(6, dtype=np.int8))
    out = run_chain(model, x0, glauber_step, 0, RngStream(3))
    assert np.array_equal(out.x.values, x0.values) and out.step_count == 0
    a = run_chain(model, x0, glauber_step, 200, RngStream(3))
    b = run_chain(model, x0, glauber_step, 200, RngStream(3))
    assert np.array_equal(a.x.values, b.x.values)
    assert a.step_count == 200


def test_mixed_chain_tv_close_to_iid_baseline():
    # after 50 n ln n steps the chain's empirical TV must be within 0.02 of
    # the TV of an equally sized iid sample from the exact law (the direct
    # 0.02 target is below the plug-in estimator's noise floor at 1e5)
    model = random_model(10, 0.5, seed=14, field_scale=0.1)
    dist = exact.enumerate_distribution(model)
    steps = int(50 * 10 * math.log(10))
    reps = 100_000
    finals = run_chain_batch(model, steps, RngStream(15), reps, threads=2)
    chain_tv = exact.empirical_tv(finals, dist).tv_hat
    iid = exact.sample_from_distribution(dist, RngStream(16), reps)
    iid_tv = exact.empirical_tv(iid, dist).tv_hat
    assert chain_tv <= iid_tv + 0.02, (chain_tv, iid_tv)


def test_batch_chain_thread_count_invariance():
    model = random_model(8, 0.5, seed=17)
    a = run_chain_batch(model, 50, RngStream(18), 300, threads=1)
    b = run_chain_batch(model, 50, RngStream(18), 300, threads=2)
    assert np.array_equal(a, b)
