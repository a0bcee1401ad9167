"""Numba-jitted hot kernels (accelerated backend).

Every function here has a pure NumPy/Python twin in ``_fallback`` consuming
the identical random stream; `_hot` picks one set at import time.  Randomness
comes from counter-based streams: draw ``j`` of stream ``key`` is a pure
function of ``(key, j)``, so results are independent of scheduling.

Thinning uses a block-constant dominating rate: with jump size e, the bound
B = lambda(block start) + K e dominates the intensity for the next K
candidates whatever they do (the kernel is nonincreasing and each acceptance
raises lambda by exactly e).  This is exact in law, costs a few percent of
extra candidates, and keeps the per-candidate dependency chain to one
multiply, which roughly halves the single-core runtime of the near-critical
experiments.

Status codes returned by simulators: 0 = ok, 1 = event cap exceeded,
2 = thinning bound violated (internal bug, surfaced as BoundViolation).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_U64_1 = np.uint64(1)
_U64_2 = np.uint64(2)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 2.0**-53

OK = 0
CAP_EXCEEDED = 1
BOUND_VIOLATION = 2

BLOCK_FRACTION = 0.03  # extra candidate budget per thinning block
BLOCK_MAX = 256


@njit(cache=True, nogil=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True, inline="always")
def _uniform(key, counter):
    bits = _mix(key + (counter + _U64_1) * _GOLDEN)
    return (np.float64(bits >> _S11) + 0.5) * _INV53


@njit(cache=True, nogil=True, inline="always")
def _derive(key, tag):
    return _mix(key ^ _mix(tag + _GOLDEN))


@njit(cache=True, nogil=True, inline="always")
def _expm(x):
    # exp(-x) for x >= 0; degree-5 Taylor below 2e-3 (error < 9e-20, i.e.
    # below one ulp), libm otherwise.  The polynomial branch keeps the
    # accelerated and fallback backends bit-identical on the hot path.
    if x < 2e-3:
        return 1.0 - x * (
            1.0 - x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
        )
    return math.exp(-x)


@njit(cache=True, nogil=True, inline="always")
def _block_size(lam0, e):
    if e <= 0.0:
        return 1024
    k = int(BLOCK_FRACTION * lam0 / e)
    if k < 1:
        return 1
    if k > BLOCK_MAX:
        return BLOCK_MAX
    return k


# ---------------------------------------------------------------------------
# scalar samplers (consume (key, counter); return (value, new_counter))
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _normal(key, c):
    u1 = _uniform(key, c)
    u2 = _uniform(key, c + _U64_1)
    z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
    return z, c + _U64_2


@njit(cache=True, nogil=True)
def _gamma(key, c, shape):
    # Marsaglia-Tsang; shapes below one via the boost Gamma(a+1) * U^(1/a).
    if shape <= 0.0:
        return 0.0, c
    boost = 1.0
    a = shape
    if a < 1.0:
        u = _uniform(key, c)
        c += _U64_1
        boost = u ** (1.0 / a)
        a += 1.0
    d = a - 1.0 / 3.0
    cc = 1.0 / math.sqrt(9.0 * d)
    while True:
        x, c = _normal(key, c)
        v = 1.0 + cc * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _uniform(key, c)
        c += _U64_1
        if u < 1.0 - 0.0331 * x * x * x * x:
            return boost * d * v, c
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return boost * d * v, c


@njit(cache=True, nogil=True)
def _poisson(key, c, mean):
    if mean <= 0.0:
        return 0, c
    if mean < 10.0:
        # Inversion by sequential search; a single uniform.
        u = _uniform(key, c)
        c += _U64_1
        p = math.exp(-mean)
        cdf = p
        k = 0
        while u > cdf and k < 200:
            k += 1
            p *= mean / k
            cdf += p
        return k, c
    # PTRS transformed rejection (Hormann), exact for mean >= 10.
    b = 0.931 + 2.53 * math.sqrt(mean)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = _uniform(key, c) - 0.5
        v = _uniform(key, c + _U64_1)
        c += _U64_2
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + mean + 0.43))
        if us >= 0.07 and v <= v_r:
            return k, c
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (
            math.log(v * inv_alpha / (a / (us * us) + b))
            <= k * math.log(mean) - mean - math.lgamma(k + 1.0)
        ):
            return k, c


@njit(cache=True, nogil=True)
def poisson_scalar(key, c0, mean):
    """Python-facing Poisson draw; returns (k, counters consumed so far)."""
    k, c = _poisson(key, np.uint64(c0), mean)
    return k, int(c)


# ---------------------------------------------------------------------------
# renewal solver
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def renewal_exp(coeff, betas, h, n):
    """Trapezoidal forward substitution for psi = phiT + phiT * psi with
    phiT(u) = sum_c coeff[c] * exp(-betas[c] * u).

    The convolution sums are carried exactly as decayed running sums, so the
    result equals the O(n^2) trapezoid up to rounding, in O(n * ncomp).
    """
    ncomp = coeff.size
    psi = np.empty(n + 1)
    dec = np.empty(ncomp)
    ek = np.empty(ncomp)  # exp(-beta_c * t_i), for the half-weight at j=0
    A = np.zeros(ncomp)
    phi0 = 0.0
    for cmp in range(ncomp):
        dec[cmp] = math.exp(-betas[cmp] * h)
        ek[cmp] = 1.0
        phi0 += coeff[cmp]
    psi[0] = phi0
    denom = 1.0 - 0.5 * h * phi0
    for i in range(1, n + 1):
        rhs = 0.0
        phi_i = 0.0
        for cmp in range(ncomp):
            ek[cmp] *= dec[cmp]
            phi_i += coeff[cmp] * ek[cmp]
            rhs += coeff[cmp] * (0.5 * ek[cmp] * psi[0] + dec[cmp] * A[cmp])
        val = (phi_i + h * rhs) / denom
        psi[i] = val
        for cmp in range(ncomp):
            A[cmp] = dec[cmp] * A[cmp] + val
    return psi


@njit(cache=True, nogil=True)
def renewal_general(phi_vals, h, window):
    """Windowed trapezoidal forward substitution for arbitrary sampled
    kernels (phi_vals[k] = phiT(k*h), zero beyond the truncation window)."""
    n = phi_vals.size - 1
    psi = np.empty(n + 1)
    psi[0] = phi_vals[0]
    denom = 1.0 - 0.5 * h * phi_vals[0]
    n_clamped = 0
    for i in range(1, n + 1):
        lo = i - window
        if lo < 1:
            lo = 1
        acc = 0.0
        for j in range(lo, i):
            acc += phi_vals[i - j] * psi[j]
        rhs = phi_vals[i] * (1.0 + 0.5 * h * psi[0]) + h * acc
        val = rhs / denom
        if val < 0.0:
            val = 0.0
            n_clamped += 1
        psi[i] = val
    return psi, n_clamped


# ---------------------------------------------------------------------------
# Ogata thinning with block-constant bounds, exponential-family kernels
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _thin_exp1_summary(
    key, mu, excite, beta, horizon, grid_times, event_cap, want_qv, want_comp
):
    """Single-exponential specialization (scalar state): the workhorse of
    the near-critical experiments."""
    s = 0.0
    ngrid = grid_times.size
    lam_grid = np.empty(ngrid)
    count_grid = np.zeros(ngrid, dtype=np.int64)
    gpos = 0
    while gpos < ngrid and grid_times[gpos] <= 0.0:
        lam_grid[gpos] = mu
        gpos += 1
    next_grid = grid_times[gpos] if gpos < ngrid else horizon + 1.0

    t = 0.0
    n = 0
    qv = 0.0
    int_lam = 0.0
    c = np.uint64(0)
    status = OK
    alive = True

    while alive:
        lam0 = mu + s
        k_block = _block_size(lam0, excite)
        bound = lam0 + k_block * excite
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = _uniform(key, c)
            u2 = _uniform(key, c + _U64_1)
            c += _U64_2
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt

            if t_cand >= next_grid or t_cand > horizon:
                t_stop = t_cand if t_cand < horizon else horizon
                while gpos < ngrid and grid_times[gpos] <= t_stop:
                    dtg = grid_times[gpos] - t
                    lam_grid[gpos] = mu + s * _expm(beta * dtg)
                    count_grid[gpos] = n
                    gpos += 1
                next_grid = grid_times[gpos] if gpos < ngrid else horizon + 1.0

            d = _expm(beta * dt)
            if want_comp:
                if t_cand > horizon:
                    seg = horizon - t
                    int_lam += mu * seg + s * (1.0 - _expm(beta * seg)) / beta
                else:
                    int_lam += mu * dt + s * (1.0 - d) / beta

            if t_cand > horizon:
                alive = False
                break

            s *= d
            lam = mu + s
            if lam > bound * (1.0 + 1e-12):
                status = BOUND_VIOLATION
                alive = False
                break
            if u2 * bound <= lam:
                n += 1
                if want_qv:
                    qv += 1.0 / lam
                s += excite
                if n >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return lam_grid, count_grid, qv, int_lam, n, status


@njit(cache=True, nogil=True)
def thin_exp_summary(
    key, mu, a_T, weights, betas, horizon, grid_times, event_cap, want_qv,
    want_comp=True,
):
    """Simulate one univariate path, streaming summaries instead of jumps.

    Returns (lam_grid, count_grid, qv_sum, int_lambda, n_events, status):
    intensity and cumulative count at each grid time, the accumulated
    sum over jumps of 1/lambda(J-) (when want_qv), and the exact compensator
    integral of lambda over [0, horizon] (when want_comp).
    """
    ncomp = weights.size
    if ncomp == 1:
        return _thin_exp1_summary(
            key, mu, a_T * weights[0] * betas[0], betas[0], horizon, grid_times,
            event_cap, want_qv, want_comp,
        )
    excite = np.empty(ncomp)
    e_tot = 0.0
    for cmp in range(ncomp):
        excite[cmp] = a_T * weights[cmp] * betas[cmp]
        e_tot += excite[cmp]
    s = np.zeros(ncomp)

    ngrid = grid_times.size
    lam_grid = np.empty(ngrid)
    count_grid = np.zeros(ngrid, dtype=np.int64)
    gpos = 0
    while gpos < ngrid and grid_times[gpos] <= 0.0:
        lam_grid[gpos] = mu
        gpos += 1

    t = 0.0
    n = 0
    qv = 0.0
    int_lam = 0.0
    c = np.uint64(0)
    status = OK
    alive = True

    while alive:
        lam0 = mu
        for cmp in range(ncomp):
            lam0 += s[cmp]
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = _uniform(key, c)
            u2 = _uniform(key, c + _U64_1)
            c += _U64_2
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt
            t_stop = t_cand if t_cand < horizon else horizon

            while gpos < ngrid and grid_times[gpos] <= t_stop:
                lam_g = mu
                dtg = grid_times[gpos] - t
                for cmp in range(ncomp):
                    lam_g += s[cmp] * _expm(betas[cmp] * dtg)
                lam_grid[gpos] = lam_g
                count_grid[gpos] = n
                gpos += 1

            if want_comp:
                seg = t_stop - t
                int_lam += mu * seg
                for cmp in range(ncomp):
                    int_lam += s[cmp] * (1.0 - _expm(betas[cmp] * seg)) / betas[cmp]

            if t_cand > horizon:
                alive = False
                break

            lam = mu
            for cmp in range(ncomp):
                s[cmp] *= _expm(betas[cmp] * dt)
                lam += s[cmp]
            if lam > bound * (1.0 + 1e-12):
                status = BOUND_VIOLATION
                alive = False
                break
            if u2 * bound <= lam:
                n += 1
                if want_qv:
                    qv += 1.0 / lam
                for cmp in range(ncomp):
                    s[cmp] += excite[cmp]
                if n >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return lam_grid, count_grid, qv, int_lam, n, status


@njit(cache=True, nogil=True)
def thin_exp_path(key, mu, a_T, weights, betas, horizon, event_cap):
    """Full jump-time record of one univariate path (exponential family).

    Consumes the stream exactly like `thin_exp_summary`, so the same
    (key, config) yields the same events as the streaming variant.
    """
    ncomp = weights.size
    excite = np.empty(ncomp)
    e_tot = 0.0
    for cmp in range(ncomp):
        excite[cmp] = a_T * weights[cmp] * betas[cmp]
        e_tot += excite[cmp]
    s = np.zeros(ncomp)

    jumps = np.empty(1024)
    n = 0
    t = 0.0
    c = np.uint64(0)
    status = OK
    alive = True

    while alive:
        lam0 = mu
        for cmp in range(ncomp):
            lam0 += s[cmp]
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = _uniform(key, c)
            u2 = _uniform(key, c + _U64_1)
            c += _U64_2
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt
            if t_cand > horizon:
                alive = False
                break
            lam = mu
            for cmp in range(ncomp):
                s[cmp] *= _expm(betas[cmp] * dt)
                lam += s[cmp]
            if lam > bound * (1.0 + 1e-12):
                status = BOUND_VIOLATION
                alive = False
                break
            if u2 * bound <= lam:
                if n >= jumps.size:
                    grown = np.empty(2 * jumps.size)
                    grown[: jumps.size] = jumps
                    jumps = grown
                jumps[n] = t_cand
                n += 1
                if n >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
                for cmp in range(ncomp):
                    s[cmp] += excite[cmp]
            t = t_cand

    return jumps[:n].copy(), status


@njit(cache=True, nogil=True)
def thin_powerlaw_path(key, mu, a_T, alpha, x0, trunc, horizon, event_cap):
    """General-kernel thinning with a windowed jump history (power law).

    The bound here is the tight one (intensity after the last event),
    refreshed at every candidate: no constant jump size, no block shortcut.
    """
    jumps = np.empty(1024)
    n = 0
    lo = 0  # first history index still inside the truncation window
    t = 0.0
    c = np.uint64(0)
    status = OK
    amp = a_T * alpha * x0**alpha

    while True:
        while lo < n and t - jumps[lo] > trunc:
            lo += 1
        bound = mu
        for j in range(lo, n):
            bound += amp / (x0 + (t - jumps[j])) ** (1.0 + alpha)
        u1 = _uniform(key, c)
        u2 = _uniform(key, c + _U64_1)
        c += _U64_2
        t_cand = t + (-math.log(u1) / bound)
        if t_cand > horizon:
            break
        lam = mu
        for j in range(lo, n):
            d = t_cand - jumps[j]
            if d <= trunc:
                lam += amp / (x0 + d) ** (1.0 + alpha)
        if lam > bound * (1.0 + 1e-12):
            status = BOUND_VIOLATION
            break
        if u2 * bound <= lam:
            if n >= jumps.size:
                grown = np.empty(2 * jumps.size)
                grown[: jumps.size] = jumps
                jumps = grown
            jumps[n] = t_cand
            n += 1
            if n >= event_cap:
                status = CAP_EXCEEDED
                break
        t = t_cand

    return jumps[:n].copy(), status


# ---------------------------------------------------------------------------
# bivariate two-stream thinning (single-exponential phi1, phi2)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _thin_biv_same_rate_summary(
    key, mu, e1, e2, beta, horizon, grid_times, event_cap
):
    """Shared-decay specialization of `thin_biv_summary` for b1 == b2: the
    four excitation sums collapse to one per stream."""
    e_tot = e1 + e2
    sp = 0.0  # excitation feeding lam+
    sm = 0.0  # excitation feeding lam-

    ngrid = grid_times.size
    np_grid = np.zeros(ngrid, dtype=np.int64)
    nm_grid = np.zeros(ngrid, dtype=np.int64)
    gpos = 0
    while gpos < ngrid and grid_times[gpos] <= 0.0:
        gpos += 1
    next_grid = grid_times[gpos] if gpos < ngrid else horizon + 1.0

    t = 0.0
    nplus = 0
    nminus = 0
    s_plus = 0.0
    s_minus = 0.0
    c = np.uint64(0)
    status = OK
    alive = True

    while alive:
        lam0 = 2.0 * mu + sp + sm
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = _uniform(key, c)
            u2 = _uniform(key, c + _U64_1)
            c += _U64_2
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt

            if t_cand >= next_grid or t_cand > horizon:
                t_stop = t_cand if t_cand < horizon else horizon
                while gpos < ngrid and grid_times[gpos] <= t_stop:
                    np_grid[gpos] = nplus
                    nm_grid[gpos] = nminus
                    gpos += 1
                next_grid = grid_times[gpos] if gpos < ngrid else horizon + 1.0

            if t_cand > horizon:
                alive = False
                break

            d = _expm(beta * dt)
            sp *= d
            sm *= d
            lam_p = mu + sp
            lam_m = mu + sm
            tot = lam_p + lam_m
            if tot > bound * (1.0 + 1e-12):
                status = BOUND_VIOLATION
                alive = False
                break
            v = u2 * bound
            if v <= tot:
                plus = 1.0 if v <= lam_p else 0.0
                minus = 1.0 - plus
                inv = 1.0 / tot
                nplus += int(plus)
                nminus += int(minus)
                s_plus += plus * inv
                s_minus += minus * inv
                sp += plus * e1 + minus * e2
                sm += plus * e2 + minus * e1
                if nplus + nminus >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return np_grid, nm_grid, s_plus, s_minus, nplus + nminus, status


@njit(cache=True, nogil=True)
def thin_biv_summary(key, mu, a_T, w1, b1, w2, b2, horizon, grid_times, event_cap):
    """One bivariate path, streaming summaries.

    State: four decayed sums feeding (lam+, lam-); self-excitation through
    phi1 = w1 * Exp(b1), cross-excitation through phi2 = w2 * Exp(b2).
    Returns (nplus_grid, nminus_grid, s_plus, s_minus, n_events, status)
    where s_plus = sum over + jumps of 1/(lam+ + lam-)(J-), likewise s_minus.
    """
    e1 = a_T * w1 * b1
    e2 = a_T * w2 * b2
    if b1 == b2:
        return _thin_biv_same_rate_summary(
            key, mu, e1, e2, b1, horizon, grid_times, event_cap
        )
    e_tot = e1 + e2
    same_rate = b1 == b2
    sa = 0.0  # + events via phi1 -> lam+
    sb = 0.0  # - events via phi2 -> lam+
    sc = 0.0  # + events via phi2 -> lam-
    sd = 0.0  # - events via phi1 -> lam-

    ngrid = grid_times.size
    np_grid = np.zeros(ngrid, dtype=np.int64)
    nm_grid = np.zeros(ngrid, dtype=np.int64)
    gpos = 0
    while gpos < ngrid and grid_times[gpos] <= 0.0:
        gpos += 1
    next_grid = grid_times[gpos] if gpos < ngrid else horizon + 1.0

    t = 0.0
    nplus = 0
    nminus = 0
    s_plus = 0.0
    s_minus = 0.0
    c = np.uint64(0)
    status = OK
    alive = True

    while alive:
        lam0 = 2.0 * mu + sa + sb + sc + sd
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = _uniform(key, c)
            u2 = _uniform(key, c + _U64_1)
            c += _U64_2
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt

            if t_cand >= next_grid or t_cand > horizon:
                t_stop = t_cand if t_cand < horizon else horizon
                while gpos < ngrid and grid_times[gpos] <= t_stop:
                    np_grid[gpos] = nplus
                    nm_grid[gpos] = nminus
                    gpos += 1
                next_grid = grid_times[gpos] if gpos < ngrid else horizon + 1.0

            if t_cand > horizon:
                alive = False
                break

            d1 = _expm(b1 * dt)
            d2 = d1 if same_rate else _expm(b2 * dt)
            sa *= d1
            sd *= d1
            sb *= d2
            sc *= d2
            lam_p = mu + sa + sb
            lam_m = mu + sc + sd
            tot = lam_p + lam_m
            if tot > bound * (1.0 + 1e-12):
                status = BOUND_VIOLATION
                alive = False
                break
            v = u2 * bound
            if v <= tot:
                # v is uniform on [0, tot] given acceptance: pick the stream
                # branch-free (the +/- choice is a coin flip the predictor
                # cannot learn).
                plus = 1.0 if v <= lam_p else 0.0
                minus = 1.0 - plus
                inv = 1.0 / tot
                nplus += int(plus)
                nminus += int(minus)
                s_plus += plus * inv
                s_minus += minus * inv
                sa += plus * e1
                sc += plus * e2
                sb += minus * e2
                sd += minus * e1
                if nplus + nminus >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return np_grid, nm_grid, s_plus, s_minus, nplus + nminus, status


@njit(cache=True, nogil=True)
def thin_biv_path(key, mu, a_T, w1, b1, w2, b2, horizon, event_cap):
    """Full (jumps, marks) record of one bivariate path; marks are +1/-1.

    Stream-compatible with `thin_biv_summary`.
    """
    e1 = a_T * w1 * b1
    e2 = a_T * w2 * b2
    e_tot = e1 + e2
    same_rate = b1 == b2
    sa = 0.0
    sb = 0.0
    sc = 0.0
    sd = 0.0
    jumps = np.empty(1024)
    marks = np.empty(1024, dtype=np.int8)
    n = 0
    t = 0.0
    c = np.uint64(0)
    status = OK
    alive = True

    while alive:
        lam0 = 2.0 * mu + sa + sb + sc + sd
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = _uniform(key, c)
            u2 = _uniform(key, c + _U64_1)
            c += _U64_2
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt
            if t_cand > horizon:
                alive = False
                break
            d1 = _expm(b1 * dt)
            d2 = d1 if same_rate else _expm(b2 * dt)
            sa *= d1
            sd *= d1
            sb *= d2
            sc *= d2
            lam_p = mu + sa + sb
            lam_m = mu + sc + sd
            tot = lam_p + lam_m
            if tot > bound * (1.0 + 1e-12):
                status = BOUND_VIOLATION
                alive = False
                break
            v = u2 * bound
            if v <= tot:
                if n >= jumps.size:
                    grown = np.empty(2 * jumps.size)
                    grown[: jumps.size] = jumps
                    gm = np.empty(2 * jumps.size, dtype=np.int8)
                    gm[: jumps.size] = marks
                    jumps = grown
                    marks = gm
                jumps[n] = t_cand
                if v <= lam_p:
                    marks[n] = 1
                    sa += e1
                    sc += e2
                else:
                    marks[n] = -1
                    sb += e2
                    sd += e1
                n += 1
                if n >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return jumps[:n].copy(), marks[:n].copy(), status


# ---------------------------------------------------------------------------
# intensity reconstruction at stored jump times
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def intensity_at_events(jumps, mu, a_T, weights, betas):
    """lambda(J-) (left limits) at each stored jump, exponential family."""
    ncomp = weights.size
    excite = np.empty(ncomp)
    for cmp in range(ncomp):
        excite[cmp] = a_T * weights[cmp] * betas[cmp]
    s = np.zeros(ncomp)
    out = np.empty(jumps.size)
    t = 0.0
    for i in range(jumps.size):
        dt = jumps[i] - t
        lam = mu
        for cmp in range(ncomp):
            s[cmp] *= _expm(betas[cmp] * dt)
            lam += s[cmp]
        out[i] = lam
        for cmp in range(ncomp):
            s[cmp] += excite[cmp]
        t = jumps[i]
    return out


@njit(cache=True, nogil=True)
def biv_intensity_at_events(jumps, marks, mu, a_T, w1, b1, w2, b2):
    """(lam+, lam-) left limits at each jump of a stored bivariate path."""
    e1 = a_T * w1 * b1
    e2 = a_T * w2 * b2
    sa = 0.0
    sb = 0.0
    sc = 0.0
    sd = 0.0
    lamp = np.empty(jumps.size)
    lamm = np.empty(jumps.size)
    t = 0.0
    for i in range(jumps.size):
        dt = jumps[i] - t
        d1 = _expm(b1 * dt)
        d2 = _expm(b2 * dt)
        sa *= d1
        sd *= d1
        sb *= d2
        sc *= d2
        lamp[i] = mu + sa + sb
        lamm[i] = mu + sc + sd
        if marks[i] > 0:
            sa += e1
            sc += e2
        else:
            sb += e2
            sd += e1
        t = jumps[i]
    return lamp, lamm


# ---------------------------------------------------------------------------
# geometric random sums (resolvent sampling)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def geom_sums(key_base, n, a_T, T, shape_code, p1, p2, weights, betas):
    """n draws of (1/T) * sum_{i<=I} X_i, I geometric(1 - a_T) on {1,2,...}.

    Sample j uses the derived stream key mix(key_base, j), so the draw is a
    pure function of (key_base, j): backend- and order-independent.
    shape_code: 0 Exponential(rate p1), 1 PowerLaw(alpha p1, x0 p2),
    2 SumOfExponentials(weights, betas).
    """
    out = np.empty(n)
    log_a = math.log(a_T) if a_T > 0.0 else 0.0
    ncomp = weights.size
    for j in range(n):
        skey = _derive(key_base, np.uint64(j))
        u0 = _uniform(skey, np.uint64(0))
        if a_T <= 0.0:
            count = 1
        else:
            count = 1 + int(math.log(u0) / log_a)
            if count < 1:
                count = 1
        total = 0.0
        c = _U64_1
        for _ in range(count):
            if shape_code == 0:
                u = _uniform(skey, c)
                c += _U64_1
                total += -math.log(u) / p1
            elif shape_code == 1:
                u = _uniform(skey, c)
                c += _U64_1
                total += p2 * (u ** (-1.0 / p1) - 1.0)
            else:
                uc = _uniform(skey, c)
                ux = _uniform(skey, c + _U64_1)
                c += _U64_2
                acc = 0.0
                comp = ncomp - 1
                for k in range(ncomp):
                    acc += weights[k]
                    if uc <= acc:
                        comp = k
                        break
                total += -math.log(ux) / betas[comp]
        out[j] = total / T
    return out


# ---------------------------------------------------------------------------
# CIR exact transition sampling
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _cir_step(key, c, x, ef, cscale, dof):
    """One draw from the CIR transition given decay factor ef = exp(-k dt)
    and scale cscale = nu^2 (1 - ef) / (4 k); dof = 4 k theta / nu^2."""
    nc = x * ef / cscale
    if dof > 1.0:
        z, c = _normal(key, c)
        g, c = _gamma(key, c, 0.5 * (dof - 1.0))
        rt = math.sqrt(nc)
        return cscale * ((z + rt) * (z + rt) + 2.0 * g), c
    k, c = _poisson(key, c, 0.5 * nc)
    g, c = _gamma(key, c, 0.5 * dof + k)
    return cscale * 2.0 * g, c


@njit(cache=True, nogil=True)
def cir_path_exact(key, kappa, theta, nu, x0, dt, n_steps):
    """Exact-transition CIR path on the grid {0, dt, ..., n_steps * dt}."""
    xs = np.empty(n_steps + 1)
    xs[0] = x0
    if nu <= 0.0:
        for i in range(1, n_steps + 1):
            xs[i] = theta + (xs[i - 1] - theta) * math.exp(-kappa * dt)
        return xs
    ef = math.exp(-kappa * dt)
    cscale = nu * nu * (1.0 - ef) / (4.0 * kappa)
    dof = 4.0 * kappa * theta / (nu * nu)
    c = np.uint64(0)
    x = x0
    for i in range(1, n_steps + 1):
        x, c = _cir_step(key, c, x, ef, cscale, dof)
        xs[i] = x
    return xs


@njit(cache=True, nogil=True)
def cir_path_euler(key, kappa, theta, nu, x0, dt, n_steps):
    """Full-truncation Euler CIR path (differential-testing oracle)."""
    xs = np.empty(n_steps + 1)
    xs[0] = x0
    c = np.uint64(0)
    x = x0
    sq_dt = math.sqrt(dt)
    for i in range(1, n_steps + 1):
        xp = x if x > 0.0 else 0.0
        z, c = _normal(key, c)
        x = x + kappa * (theta - xp) * dt + nu * math.sqrt(xp) * sq_dt * z
        xs[i] = x
    return xs


@njit(cache=True, nogil=True)
def cir_step_single(key, x, kappa, theta, nu, dt):
    """One exact CIR transition draw (consumes the head of stream `key`)."""
    if nu <= 0.0:
        return theta + (x - theta) * math.exp(-kappa * dt)
    ef = math.exp(-kappa * dt)
    cscale = nu * nu * (1.0 - ef) / (4.0 * kappa)
    dof = 4.0 * kappa * theta / (nu * nu)
    val, _ = _cir_step(key, np.uint64(0), x, ef, cscale, dof)
    return val
