"""Compiled hot paths (numba, nogil).

The recursive sampler kernel mirrors the pure-Python reference in
``parallel._sample_node_reference`` operation for operation: same stream
protocol, same float accumulation order. Tests assert bit-identical
outputs between the two, so any edit here must keep that mirror intact.

Telemetry array slots: 0 node_count, 1 leaf_count, 2 total rejection
tries, 3 max depth seen.
"""

import numpy as np
from numba import njit

from .errors import DepthExceeded, MaxTriesExceeded

U64 = np.uint64
_G = U64(0x9E3779B97F4A7C15)
_SEED_SALT = U64(0x5851F42D4C957F2D)

TELEM_NODES = 0
TELEM_LEAVES = 1
TELEM_TRIES = 2
TELEM_MAX_DEPTH = 3


@njit(cache=True, nogil=True, inline="always")
def _mix(z):
    z = U64(z)
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True, inline="always")
def _mix_key(z):
    z = U64(z)
    z = (z ^ (z >> U64(33))) * U64(0xFF51AFD7ED558CCD)
    z = (z ^ (z >> U64(33))) * U64(0xC4CEB9FE1A85EC53)
    return z ^ (z >> U64(33))


@njit(cache=True, nogil=True, inline="always")
def seed_key(seed):
    return _mix_key(U64(seed) ^ _SEED_SALT)


@njit(cache=True, nogil=True, inline="always")
def derive(key, branch):
    return _mix_key(U64(key) + U64(branch + 1) * _G)


@njit(cache=True, nogil=True, inline="always")
def u01(key, pos):
    bits = _mix(U64(key) + U64(pos + 1) * _G)
    return (np.float64(bits >> U64(11)) + 0.5) * (2.0**-53)


@njit(cache=True, nogil=True, inline="always")
def prob_plus(theta):
    if theta >= 0.0:
        e = np.exp(-2.0 * theta)
        return 1.0 / (1.0 + e)
    e = np.exp(2.0 * theta)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _quad_form(J, R, x):
    # 0.5 * x . J_RR . x, fixed row-major accumulation order
    m = R.shape[0]
    total = 0.0
    for a in range(m):
        ra = R[a]
        acc = 0.0
        for b in range(m):
            acc += J[ra, R[b]] * x[b]
        total += x[a] * acc
    return 0.5 * total


# cache=False: numba's on-disk cache mishandles self-recursive functions
# (cached binary segfaults); recompiles once per process instead.
@njit(cache=False, nogil=True)
def sample_node(J, R, h, key, depth, log_n_eps, c1, c3, C2, C4,
                max_depth, max_tries, telem, level_frob, extras):
    """One node of the recursive sampler; returns +-1 floats over R."""
    m = R.shape[0]
    telem[TELEM_NODES] += 1
    if depth > telem[TELEM_MAX_DEPTH]:
        telem[TELEM_MAX_DEPTH] = depth

    frob = 0.0
    for a in range(m):
        ra = R[a]
        for b in range(m):
            v = J[ra, R[b]]
            frob += v * v
    frob = np.sqrt(frob)
    if frob > level_frob[depth]:
        level_frob[depth] = frob

    y = np.empty(m, np.float64)

    if frob <= c3:
        # leaf: approximate rejection sampling against the product proposal
        telem[TELEM_LEAVES] += 1
        if depth == 0:
            extras[0] = 1
            extras[1] = m
            extras[2] = 0
        p = np.empty(m, np.float64)
        for i in range(m):
            p[i] = prob_plus(h[i])
        cutoff_log = np.log(C4 * log_n_eps)
        rkey = derive(key, 0)
        x = np.empty(m, np.float64)
        z = np.empty(m, np.float64)
        for j in range(max_tries):
            akey = derive(rkey, j)
            xkey = derive(akey, 0)
            zkey = derive(akey, 1)
            for i in range(m):
                x[i] = 1.0 if u01(derive(xkey, i), 0) < p[i] else -1.0
            for i in range(m):
                z[i] = 1.0 if u01(derive(zkey, i), 0) < p[i] else -1.0
            g_x = _quad_form(J, R, x)
            g_z = _quad_form(J, R, z)
            u = u01(derive(akey, 2), 0)
            telem[TELEM_TRIES] += 1
            if np.log(u) <= g_x - g_z - cutoff_log:
                for i in range(m):
                    y[i] = x[i]
                return y
        raise MaxTriesExceeded(
            "rejection sampler exceeded its try budget; cutoff miscalibrated")

    s = int(np.ceil(c1 * m / (log_n_eps * frob)))
    if s > m:
        raise ValueError("internal error: subset size exceeded block size")
    T = int(np.floor(C2 * log_n_eps * m / s))
    if depth == 0:
        extras[0] = 0
        extras[1] = s
        extras[2] = T
    if depth + 1 > max_depth:
        raise DepthExceeded("recursive sampler exceeded the depth cap")

    pkey = derive(key, 0)
    for i in range(m):
        y[i] = 1.0 if u01(derive(pkey, i), 0) < prob_plus(h[i]) else -1.0

    arr = np.empty(m, np.int64)
    sel = np.empty(s, np.int64)
    r_sub = np.empty(s, np.int64)
    h_sub = np.empty(s, np.float64)
    for t in range(1, T + 1):
        itk = derive(key, t)
        skey = derive(itk, 0)
        for i in range(m):
            arr[i] = i
        for j in range(s):
            r = j + int(u01(skey, j) * (m - j))
            tmp = arr[j]
            arr[j] = arr[r]
            arr[r] = tmp
        for a in range(1, s):
            v = arr[a]
            b = a - 1
            while b >= 0 and arr[b] > v:
                arr[b + 1] = arr[b]
                b -= 1
            arr[b + 1] = v
        for j in range(s):
            sel[j] = arr[j]
        for j in range(s):
            loc = sel[j]
            gi = R[loc]
            acc = h[loc]
            for q in range(m):
                acc += J[gi, R[q]] * y[q]
            for q in range(s):
                acc -= J[gi, R[sel[q]]] * y[sel[q]]
            r_sub[j] = gi
            h_sub[j] = acc
        z_out = sample_node(J, r_sub, h_sub, derive(itk, 1), depth + 1,
                            log_n_eps, c1, c3, C2, C4, max_depth, max_tries,
                            telem, level_frob, extras)
        for j in range(s):
            y[sel[j]] = z_out[j]
    return y


@njit(cache=True, nogil=True)
def glauber_chain(J, h, x, key, start_step, steps):
    """Run single-site resampling in place; two draws per step."""
    n = x.shape[0]
    for t in range(start_step, start_step + steps):
        i = int(u01(key, 2 * t) * n)
        theta = h[i]
        for j in range(n):
            theta += J[i, j] * x[j]
        x[i] = 1.0 if u01(key, 2 * t + 1) < prob_plus(theta) else -1.0
    return x


@njit(cache=True, nogil=True)
def glauber_chain_batch(J, h, keys, steps, out):
    """Independent chains from product initialization, one key per replica.

    Replica r draws its start from stream ``derive(keys[r], 0)`` (one child
    stream per coordinate, matching ``sampling.sample_product``) and then
    runs the chain on stream ``derive(keys[r], 1)``.
    """
    n = J.shape[0]
    x = np.empty(n, np.float64)
    for r in range(keys.shape[0]):
        ikey = derive(keys[r], 0)
        for i in range(n):
            x[i] = 1.0 if u01(derive(ikey, i), 0) < prob_plus(h[i]) else -1.0
        glauber_chain(J, h, x, derive(keys[r], 1), 0, steps)
        for i in range(n):
            out[r, i] = np.int8(1 if x[i] > 0.0 else -1)
