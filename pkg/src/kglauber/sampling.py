"""Subset and product sampling on splittable streams.

Draw protocols are pinned here and mirrored bit-for-bit by the compiled
sampler kernels, so the pure-Python and compiled paths can be compared
exactly in tests:

* ``sample_subset``: draw j (j = 0..s-1) is one uniform from the given
  stream, used as the partial Fisher-Yates swap position.
* ``sample_product``: coordinate i draws one uniform from ``rng.split(i)``,
  so all coordinates may be drawn concurrently.
"""

from __future__ import annotations

import numpy as np

from .model import ProductDistribution, SpinVector, SubsetIndex
from .rng import RngStream, derive_keys, uniforms_at


def sample_subset(rng: RngStream, m: int, s: int) -> SubsetIndex:
    """Uniform size-s subset of [m] by partial Fisher-Yates."""
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got s={s}, m={m}")
    arr = np.arange(m)
    for j in range(s):
        r = j + int(rng.uniform() * (m - j))
        arr[j], arr[r] = arr[r], arr[j]
    return SubsetIndex(m, np.sort(arr[:s]))


def sample_subset_sorted(rng: RngStream, m: int, s: int) -> SubsetIndex:
    """Uniform size-s subset of [m] by ranking random keys.

    The parallel-friendly alternative: attach one uniform key to every
    index and keep the s smallest. Distributionally identical to
    :func:`sample_subset`.
    """
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got s={s}, m={m}")
    keys = rng.uniforms(m)
    members = np.sort(np.argpartition(keys, s - 1)[:s])
    return SubsetIndex(m, members)


def sample_product(rng: RngStream, q: ProductDistribution) -> SpinVector:
    """Independent draw from a product law, one child stream per coordinate."""
    n = len(q)
    keys = derive_keys(rng.key, np.arange(n))
    u = uniforms_at(keys, np.zeros(n, dtype=np.int64))
    values = np.where(u < q.p_plus, 1, -1).astype(np.int8)
    return SpinVector(q.indices, values)
