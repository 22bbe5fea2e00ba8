"""Subset and product sampling laws: uniformity and protocol checks."""

import math
from itertools import combinations

import numpy as np
from scipy.stats import chisquare

import kglauber as kg
from kglauber.rng import (RngStream, derive_keys, derive_keys_from,
                          uniforms_at)
from kglauber.sampling import sample_product, sample_subset, sample_subset_sorted


def test_full_set_when_s_equals_m():
    sub = sample_subset(RngStream(0), 5, 5)
    assert np.array_equal(sub.members, np.arange(5))


def test_subset_size_validation():
    import pytest
    with pytest.raises(ValueError):
        sample_subset(RngStream(0), 4, 5)
    with pytest.raises(ValueError):
        sample_subset(RngStream(0), 4, 0)


def test_subset_uniform_m4_s2():
    # all six 2-subsets of [4] equally likely: frequency within 1/6 +- 0.005
    # at 6e5 draws (10 sigma), plus a chi-square sanity level
    root = RngStream(101)
    counts = {c: 0 for c in combinations(range(4), 2)}
    draws = 600_000
    for i in range(draws):
        sub = sample_subset(root.split(i), 4, 2)
        counts[tuple(sub.members)] += 1
    freqs = np.array(list(counts.values())) / draws
    assert np.all(np.abs(freqs - 1 / 6) < 0.005), freqs
    stat, pval = chisquare(list(counts.values()))
    assert pval > 1e-6, (stat, pval)


def test_subset_m1000_s1_frequencies():
    # s=1 consumes exactly one uniform: draw i of stream split(i) equals
    # floor(u * m); verified against the scalar op, then scaled to 1e7
    root = RngStream(202)
    m, draws = 1000, 10_000_000
    keys = derive_keys(root.key, np.arange(draws))
    idx = (uniforms_at(keys, np.zeros(draws, dtype=np.int64)) * m).astype(np.int64)
    for probe in (0, 1, 12345, 999_999):
        assert sample_subset(root.split(probe), m, 1).members[0] == idx[probe]
    freqs = np.bincount(idx, minlength=m) / draws
    sigma = math.sqrt((1 / m) * (1 - 1 / m) / draws)
    assert np.all(np.abs(freqs - 1 / m) < 5 * sigma)


def test_sorted_sampler_matches_fisher_yates_law():
    # both subset samplers target the same uniform law (m=5, s=2)
    root = RngStream(303)
    subsets = list(combinations(range(5), 2))
    rank = {c: r for r, c in enumerate(subsets)}
    draws = 100_000
    counts = np.zeros((2, len(subsets)))
    for i in range(draws):
        counts[0, rank[tuple(sample_subset(root.split(2 * i), 5, 2).members)]] += 1
        counts[1, rank[tuple(sample_subset_sorted(root.split(2 * i + 1), 5, 2).members)]] += 1
    for row in counts:
        stat, pval = chisquare(row)
        assert pval > 1e-6, (row, pval)
    stat, pval = chisquare(counts[0], f_exp=counts[1] * counts[0].sum() / counts[1].sum())
    assert pval > 1e-6


def test_product_fair_coin():
    # theta=0, one coordinate: +1 frequency 1/2 within 3 sigma at 1e6 draws;
    # vectorized via the per-coordinate stream protocol, spot-checked
    # against the scalar op
    root = RngStream(404)
    draws = 1_000_000
    call_keys = derive_keys(root.key, np.arange(draws))
    coord_keys = derive_keys_from(call_keys, 0)
    u = uniforms_at(coord_keys, np.zeros(draws, dtype=np.int64))
    values = np.where(u < 0.5, 1, -1)
    q = kg.product_proposal(np.zeros(1))
    for probe in (0, 5, 999_999):
        assert sample_product(root.split(probe), q).values[0] == values[probe]
    freq = np.mean(values > 0)
    assert abs(freq - 0.5) < 3 * 0.5 / math.sqrt(draws)


def test_product_saturation():
    q = kg.product_proposal(np.full(8, 60.0))
    for i in range(50):
        assert np.all(sample_product(RngStream(1).split(i), q).values == 1)


def test_product_joint_two_coordinates():
    # theta = (0.3, -0.7): empirical joint within TV 0.01 of the product law
    theta = np.array([0.3, -0.7])
    q = kg.product_proposal(theta)
    root = RngStream(505)
    draws = 1_000_000
    call_keys = derive_keys(root.key, np.arange(draws))
    vals = np.empty((draws, 2), dtype=np.int8)
    for coord in range(2):
        ck = derive_keys_from(call_keys, coord)
        u = uniforms_at(ck, np.zeros(draws, dtype=np.int64))
        vals[:, coord] = np.where(u < q.p_plus[coord], 1, -1)
    for probe in (0, 77, 999_998):
        assert np.array_equal(sample_product(root.split(probe), q).values,
                              vals[probe])
    idx = (vals[:, 0] > 0) + 2 * (vals[:, 1] > 0)
    emp = np.bincount(idx, minlength=4) / draws
    p = q.p_plus
    expected = np.array([(1 - p[0]) * (1 - p[1]), p[0] * (1 - p[1]),
                         (1 - p[0]) * p[1], p[0] * p[1]])
    assert 0.5 * np.abs(emp - expected).sum() <= 0.01


def test_product_log_mass_consistency():
    q = kg.product_proposal(np.array([0.4, -1.1, 0.0]))
    total = 0.0
    from kglauber.glauber import spin_table
    for row in spin_table(3):
        total += math.exp(q.log_mass(row))
    assert abs(total - 1.0) < 1e-12
