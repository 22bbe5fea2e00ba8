"""Model construction, energies, conditionals, norms, file formats."""

import math

import numpy as np
import pytest

import kglauber as kg
from kglauber import exact
from kglauber.model import (load_coupling_matrix, load_field_vector,
                            save_dense_csv, save_field_vector)

from helpers import conditional_from_full, random_model, tv


def test_new_ising_zero_matrix():
    m = kg.new_ising(np.zeros((2, 2)), np.zeros(2))
    assert np.array_equal(m.J, np.zeros((2, 2)))


def test_new_ising_strips_diagonal():
    m = kg.new_ising([[5.0, 0.3], [0.3, -2.0]], np.zeros(2))
    assert np.array_equal(m.J, [[0.0, 0.3], [0.3, 0.0]])


def test_new_ising_diagonal_removal_preserves_distribution():
    # enumerate with the raw diagonal kept (independent oracle) and compare
    rs = kg.RngStream(17)
    raw = rs.normals(64).reshape(8, 8)
    raw = 0.5 * (raw + raw.T) * 0.3
    h = rs.normals(8) * 0.2
    X = np.where(((np.arange(256)[:, None] >> np.arange(8)) & 1) == 1, 1.0, -1.0)
    logw = 0.5 * np.einsum("si,ij,sj->s", X, raw, X) + X @ h
    before = np.exp(logw - logw.max())
    before /= before.sum()
    after = exact.enumerate_distribution(kg.new_ising(raw, h)).probabilities
    assert tv(before, after) < 1e-12


def test_new_ising_rejects_asymmetry_and_non_finite():
    with pytest.raises(ValueError, match="asymmetry"):
        kg.new_ising([[0.0, 1.0], [0.5, 0.0]], np.zeros(2))
    with pytest.raises(ValueError):
        kg.new_ising([[0.0, np.inf], [np.inf, 0.0]], np.zeros(2))
    with pytest.raises(ValueError):
        kg.new_ising(np.zeros((2, 2)), np.zeros(3))
    # round-off asymmetry is silently symmetrized
    J = np.array([[0.0, 0.3], [0.3 * (1 + 1e-12), 0.0]])
    m = kg.new_ising(J, np.zeros(2))
    assert m.J[0, 1] == m.J[1, 0]


def test_energy_closed_forms():
    m0 = kg.new_ising(np.zeros((3, 3)), np.zeros(3))
    x = kg.SpinVector.full([1, -1, 1])
    assert kg.energy(m0, x) == 0.0
    a = 0.7
    m = kg.new_ising([[0.0, a], [a, 0.0]], np.zeros(2))
    assert abs(kg.energy(m, kg.SpinVector.full([1, 1])) - a) < 1e-15


def test_energy_matches_double_loop_oracle():
    model = random_model(10, 0.6, seed=3)
    rs = kg.RngStream(4)
    values = np.where(rs.uniforms(10) < 0.5, -1, 1).astype(np.int8)
    expected = 0.0
    for i in range(10):
        expected += model.h[i] * values[i]
        for j in range(10):
            expected += 0.5 * model.J[i, j] * values[i] * values[j]
    assert abs(kg.energy(model, kg.SpinVector.full(values)) - expected) < 1e-12


def test_energy_requires_full_cover():
    model = random_model(4, 0.5, seed=1)
    with pytest.raises(ValueError):
        kg.energy(model, kg.SpinVector(np.array([0, 1]), np.array([1, 1])))


def test_conditional_field_closed_forms():
    model = kg.new_ising(np.zeros((3, 3)), np.array([0.4, -0.2, 0.9]))
    S = kg.SubsetIndex(3, [0, 2])
    x_comp = kg.SpinVector(np.array([1]), np.array([1], dtype=np.int8))
    assert np.allclose(kg.conditional_field(model, S, x_comp), [0.4, 0.9])

    J = np.zeros((3, 3))
    J[0, 1] = J[1, 0] = 0.5
    J[0, 2] = J[2, 0] = -0.2
    model = kg.new_ising(J, np.zeros(3))
    S = kg.SubsetIndex(3, [0])
    x_comp = kg.SpinVector(np.array([1, 2]), np.array([1, 1], dtype=np.int8))
    field = kg.conditional_field(model, S, x_comp)
    assert np.allclose(field, [0.3])


def test_conditional_law_identity_by_enumeration():
    # mu(X_S | X_comp) equals the Ising law with couplings J_SS and the
    # conditional field, for random partitions at n = 12
    model = random_model(12, 0.6, seed=9)
    dist = exact.enumerate_distribution(model)
    rs = kg.RngStream(10)
    for case in range(8):
        size = 1 + rs.integer(5)
        members = np.sort(
            np.argpartition(rs.uniforms(12), size - 1)[:size])
        S = kg.SubsetIndex(12, members)
        comp = S.complement()
        comp_vals = np.where(rs.uniforms(comp.size) < 0.5, -1, 1).astype(np.int8)
        x_comp = kg.SpinVector(comp, comp_vals)
        field = kg.conditional_field(model, S, x_comp)
        sub = kg.IsingModel(model.J[np.ix_(members, members)], field)
        law = exact.enumerate_distribution(sub).probabilities
        oracle = conditional_from_full(dist, members, comp, comp_vals)
        assert tv(law, oracle) < 1e-12


def test_conditional_field_rejects_bad_partition():
    model = random_model(4, 0.5, seed=2)
    S = kg.SubsetIndex(4, [0, 1])
    bad = kg.SpinVector(np.array([1, 3]), np.array([1, 1], dtype=np.int8))
    with pytest.raises(ValueError):
        kg.conditional_field(model, S, bad)


def test_product_proposal_values():
    q = kg.product_proposal(np.zeros(3))
    assert np.allclose(q.p_plus, 0.5)
    q = kg.product_proposal([50.0])
    assert abs(q.p_plus[0] - 1.0) < 1e-15
    q = kg.product_proposal([-50.0])
    assert 0.0 <= q.p_plus[0] < 1e-15
    oracle = math.exp(0.3) / (math.exp(0.3) + math.exp(-0.3))
    assert abs(kg.product_proposal([0.3]).p_plus[0] - oracle) < 1e-15
    assert abs(oracle - 0.645656) < 1e-6
    with pytest.raises(ValueError):
        kg.product_proposal([np.nan])


def test_kl_of_conditional_vs_product_proposal_bounded():
    # KL(P || Q) <= ||J_SS|| * |S| over random partitions
    model = random_model(12, 0.7, seed=21)
    dist = exact.enumerate_distribution(model)
    rs = kg.RngStream(22)
    for case in range(10):
        size = 1 + rs.integer(6)
        members = np.sort(np.argpartition(rs.uniforms(12), size - 1)[:size])
        comp = np.setdiff1d(np.arange(12), members)
        comp_vals = np.where(rs.uniforms(comp.size) < 0.5, -1, 1).astype(np.int8)
        S = kg.SubsetIndex(12, members)
        field = kg.conditional_field(model, S,
                                     kg.SpinVector(comp, comp_vals))
        p = conditional_from_full(dist, members, comp, comp_vals)
        from kglauber.glauber import spin_table
        X = spin_table(size)
        logq = X @ field
        q = np.exp(logq - logq.max())
        q /= q.sum()
        kl = exact.divergences(p, q).kl
        norm_ss = np.linalg.norm(model.J[np.ix_(members, members)], 2)
        assert kl <= norm_ss * size + 1e-12


def test_log_ratio_quadratic():
    model = random_model(10, 0.5, seed=5)
    S = kg.SubsetIndex(10, [4])
    x = kg.SpinVector(np.array([4]), np.array([1], dtype=np.int8))
    assert kg.log_ratio_quadratic(model, S, x) == 0.0  # zero diagonal

    J = np.zeros((3, 3))
    J[0, 1] = J[1, 0] = 0.3
    m2 = kg.new_ising(J, np.zeros(3))
    S = kg.SubsetIndex(3, [0, 1])
    x = kg.SpinVector(np.array([0, 1]), np.array([1, -1], dtype=np.int8))
    assert abs(kg.log_ratio_quadratic(m2, S, x) + 0.3) < 1e-15


def test_log_ratio_reweights_product_to_conditional():
    # exp(g(x)) q(x), renormalized, equals the exact conditional law
    model = random_model(10, 0.6, seed=6)
    dist = exact.enumerate_distribution(model)
    rs = kg.RngStream(7)
    members = np.array([1, 4, 8])
    comp = np.setdiff1d(np.arange(10), members)
    comp_vals = np.where(rs.uniforms(comp.size) < 0.5, -1, 1).astype(np.int8)
    S = kg.SubsetIndex(10, members)
    field = kg.conditional_field(model, S, kg.SpinVector(comp, comp_vals))
    from kglauber.glauber import spin_table
    X = spin_table(3)
    logw = np.array([
        kg.log_ratio_quadratic(model, S,
                               kg.SpinVector(members, row.astype(np.int8)))
        for row in X]) + X @ field
    w = np.exp(logw - logw.max())
    w /= w.sum()
    oracle = conditional_from_full(dist, members, comp, comp_vals)
    assert tv(w, oracle) < 1e-12


def test_submatrix_frobenius():
    m0 = kg.new_ising(np.zeros((4, 4)), np.zeros(4))
    assert kg.submatrix_frobenius(m0, kg.SubsetIndex(4, [0, 2])) == 0.0

    J = np.zeros((3, 3))
    J[0, 1] = J[1, 0] = 0.3
    m = kg.new_ising(J, np.zeros(3))
    got = kg.submatrix_frobenius(m, kg.SubsetIndex(3, [0, 1]))
    assert abs(got - math.sqrt(2 * 0.09)) < 1e-15

    model = random_model(16, 0.9, seed=8)
    S = kg.SubsetIndex(16, np.arange(0, 16, 2))
    naive = 0.0
    for i in S.members:
        for j in S.members:
            naive += model.J[i, j] ** 2
    assert abs(kg.submatrix_frobenius(model, S) - math.sqrt(naive)) < 1e-12


def test_operator_norm_cases():
    m0 = kg.new_ising(np.zeros((5, 5)), np.zeros(5))
    assert kg.operator_norm(m0, 1e-10) == 0.0

    J = np.array([[0.0, 0.25], [0.25, 0.0]])
    m = kg.new_ising(J, np.zeros(2))
    assert abs(kg.operator_norm(m, 1e-12) - 0.25) < 1e-10

    model = random_model(64, 1.7, seed=12, field_scale=0.0)
    dense = np.max(np.abs(np.linalg.eigvalsh(model.J)))
    assert abs(kg.operator_norm(model, 1e-10) - dense) < 1e-7 * dense

    with pytest.raises(kg.ConvergenceError):
        kg.operator_norm(model, 1e-14, max_iters=2)


def test_sk_model_properties():
    assert np.array_equal(kg.sk_model(6, 0.0, 1).J, np.zeros((6, 6)))
    assert np.array_equal(kg.sk_model(50, 0.3, 9).J, kg.sk_model(50, 0.3, 9).J)
    norms = [kg.operator_norm(kg.sk_model(1000, 0.2, seed), 1e-6)
             for seed in range(20)]
    assert all(0.3 < v < 0.5 for v in norms), norms


def test_sk_model_variance():
    m = kg.sk_model(400, 0.5, 3)
    iu = np.triu_indices(400, k=1)
    sample_var = np.var(m.J[iu])
    assert abs(sample_var - 0.5**2 / 400) < 0.1 * 0.5**2 / 400


def test_model_arrays_immutable():
    model = random_model(4, 0.5, seed=1)
    with pytest.raises(ValueError):
        model.J[0, 1] = 9.0


def test_file_roundtrips(tmp_path):
    model = random_model(6, 0.5, seed=30)
    dense = tmp_path / "J.csv"
    save_dense_csv(dense, model.J)
    assert np.array_equal(load_coupling_matrix(dense), model.J)

    sparse = tmp_path / "J.txt"
    with open(sparse, "w") as fh:
        fh.write("# upper triangle only; closure fills the rest\n")
        for i in range(6):
            for j in range(i + 1, 6):
                if model.J[i, j] != 0.0:
                    fh.write(f"{i} {j} {float(model.J[i, j])!r}\n")
    assert np.array_equal(load_coupling_matrix(sparse, size=6), model.J)

    field = tmp_path / "h.txt"
    save_field_vector(field, model.h)
    assert np.array_equal(load_field_vector(field), model.h)


def test_file_validation(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("0.0,1.0\n")
    with pytest.raises(ValueError, match="square"):
        load_coupling_matrix(bad)
    nonfinite = tmp_path / "inf.txt"
    nonfinite.write_text("0 1 inf\n")
    with pytest.raises(ValueError, match="finite"):
        load_coupling_matrix(nonfinite)
    short = tmp_path / "h.txt"
    short.write_text("1.0\n2.0\n")
    with pytest.raises(ValueError, match="expected"):
        load_field_vector(short, size=3)
