"""Splittable counter-based random streams.

Every stream is identified by a 64-bit key derived from ``(seed, path)``,
where ``path`` is the sequence of branch indices taken from the root stream.
Draw ``i`` of a stream is a pure function of ``(key, i)``, so

* identical ``(seed, path)`` reproduces identical output sequences,
* child streams are independent of the parent's draw position, and
* any draw can be computed out of order or in vectorized blocks.

This is what makes the recursive sampler deterministic for every worker
count: the tree of streams mirrors the tree of tasks, never the schedule.

The mixing functions are the SplitMix64 finalizer (outputs) and the
MurmurHash3 finalizer (key derivation); both are invertible 64-bit mixers
that pass standard statistical batteries. No cryptographic guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15  # 2^64 / golden ratio, odd
_SEED_SALT = 0x5851F42D4C957F2D

# numpy counterparts for vectorized paths
_U64_GOLDEN = np.uint64(_GOLDEN)
_U64_ONE = np.uint64(1)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (used for stream outputs)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix64_key(z: int) -> int:
    """MurmurHash3 finalizer on a Python int (used for key derivation)."""
    z &= _MASK64
    z = ((z ^ (z >> 33)) * 0xFF51AFD7ED558CCD) & _MASK64
    z = ((z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53) & _MASK64
    return z ^ (z >> 33)


def seed_key(seed: int) -> int:
    """Root stream key for a 64-bit seed."""
    return mix64_key((seed ^ _SEED_SALT) & _MASK64)


def derive_key(key: int, branch: int) -> int:
    """Key of the child stream reached by taking ``branch`` from ``key``."""
    branch = int(branch)
    if branch < 0:
        raise ValueError(f"branch index must be nonnegative, got {branch}")
    return mix64_key((int(key) + (branch + 1) * _GOLDEN) & _MASK64)


def uniform_at(key: int, pos: int) -> float:
    """Draw ``pos`` of stream ``key`` as a float in (0, 1)."""
    bits = mix64((int(key) + (int(pos) + 1) * _GOLDEN) & _MASK64)
    return ((bits >> 11) + 0.5) * 2.0**-53


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer over a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def mix64_key_array(z: np.ndarray) -> np.ndarray:
    """Vectorized MurmurHash3 finalizer over a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(33)
    z *= np.uint64(0xFF51AFD7ED558CCD)
    z ^= z >> np.uint64(33)
    z *= np.uint64(0xC4CEB9FE1A85EC53)
    z ^= z >> np.uint64(33)
    return z


def derive_keys(key: int, branches: np.ndarray) -> np.ndarray:
    """Vectorized :func:`derive_key` for an array of branch indices."""
    b = np.asarray(branches, dtype=np.uint64)
    return mix64_key_array(np.uint64(key) + (b + _U64_ONE) * _U64_GOLDEN)


def derive_keys_from(keys: np.ndarray, branch: int) -> np.ndarray:
    """Vectorized :func:`derive_key` over an array of parent keys."""
    step = np.uint64(((int(branch) + 1) * _GOLDEN) & _MASK64)
    return mix64_key_array(np.asarray(keys, dtype=np.uint64) + step)


def uniforms_at(key, positions: np.ndarray) -> np.ndarray:
    """Vectorized :func:`uniform_at`; ``key`` may be scalar or an array."""
    p = np.asarray(positions, dtype=np.uint64)
    bits = mix64_array(np.asarray(key, dtype=np.uint64) + (p + _U64_ONE) * _U64_GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass
class RngStream:
    """A value-semantic random stream addressed by ``(seed, path)``.

    Drawing advances the stream's private counter; splitting never does.
    Streams are cheap to create and safe to move between workers.
    """

    seed: int
    path: tuple[int, ...] = ()
    _key: int = field(default=-1, repr=False, compare=False)
    _pos: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        self.seed = int(self.seed) & _MASK64
        self.path = tuple(int(b) for b in self.path)
        if self._key < 0:
            key = seed_key(self.seed)
            for branch in self.path:
                key = derive_key(key, branch)
            self._key = key

    @property
    def key(self) -> int:
        return self._key

    def split(self, branch: int) -> "RngStream":
        """Child stream for ``branch``; the parent is unaffected."""
        return RngStream(self.seed, self.path + (int(branch),),
                         _key=derive_key(self._key, branch))

    def uniform(self) -> float:
        """Next float in (0, 1)."""
        u = uniform_at(self._key, self._pos)
        self._pos += 1
        return u

    def uniforms(self, count: int) -> np.ndarray:
        """Next ``count`` floats in (0, 1) as one vectorized block."""
        out = uniforms_at(self._key, np.arange(self._pos, self._pos + count))
        self._pos += count
        return out

    def integer(self, bound: int) -> int:
        """Uniform integer in [0, bound) via one draw.

        Multiply-based; bias is O(bound/2^53), irrelevant for bound < 2^32.
        """
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return int(self.uniform() * bound)

    def normals(self, count: int) -> np.ndarray:
        """Next ``count`` standard normals (Box-Muller on uniform pairs)."""
        half = (count + 1) // 2
        u = self.uniforms(2 * half)
        u1, u2 = u[:half], u[half:]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2),
                            r * np.sin(2.0 * np.pi * u2)])
        return z[:count]
