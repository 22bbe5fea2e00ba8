"""Shared test utilities: model factories and enumeration helpers."""

import numpy as np

import kglauber as kg
from kglauber import exact


def random_model(n, target_norm, seed, field_scale=0.3):
    """Random symmetric couplings rescaled to an exact operator norm."""
    rs = kg.RngStream(seed, path=(0x7261,))
    A = rs.normals(n * n).reshape(n, n)
    A = 0.5 * (A + A.T)
    np.fill_diagonal(A, 0.0)
    A *= target_norm / np.linalg.norm(A, 2)
    return kg.new_ising(A, rs.normals(n) * field_scale)


def shared_model_set(count=30, sizes=(3, 4, 5, 6, 7, 8)):
    """The 30-model pool used by the eigenvalue acceptance criteria:
    norms drawn in (0.1, 0.8], sizes cycling through 3..8."""
    rs = kg.RngStream(0x5E7, path=(1,))
    models = []
    for i in range(count):
        n = sizes[i % len(sizes)]
        norm = 0.1 + 0.7 * rs.uniform()
        models.append(random_model(n, norm, seed=1000 + i))
    return models


def conditional_from_full(dist, members, comp, comp_values):
    """Exact conditional law of X_S given X_comp, gathered from a full
    enumeration: independent of the conditional-field construction."""
    n = dist.n
    idx = np.arange(1 << n, dtype=np.int64)
    match = np.ones(idx.size, dtype=bool)
    for j, pos in enumerate(comp):
        bit = (idx >> int(pos)) & 1
        match &= bit == (1 if comp_values[j] > 0 else 0)
    sel = idx[match]
    local = np.zeros(sel.size, dtype=np.int64)
    for j, pos in enumerate(members):
        local |= ((sel >> int(pos)) & 1) << j
    probs = np.zeros(1 << len(members))
    np.add.at(probs, local, dist.probabilities[sel])
    return probs / probs.sum()


def tv(p, q):
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
