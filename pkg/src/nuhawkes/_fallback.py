"""Pure NumPy/Python twins of the numba kernels in `_loops`.

Selected by setting ``NUH_PURE_NUMPY=1``.  Each function consumes the same
counter-based random stream as its accelerated twin, in the same order, so
the two backends agree to floating-point rounding (bit-exact wherever only
the shared polynomial/arithmetic path is involved).  The event loops are
plain Python and meant for moderate sizes; array-shaped work (renewal
convolution, stream refills) stays vectorized.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from ._rng import derive_key, uniform_array

OK = 0
CAP_EXCEEDED = 1
BOUND_VIOLATION = 2

BLOCK_FRACTION = 0.03
BLOCK_MAX = 256

_BUF = 8192


def _block_size(lam0: float, e: float) -> int:
    if e <= 0.0:
        return 1024
    return max(1, min(BLOCK_MAX, int(BLOCK_FRACTION * lam0 / e)))


class StreamReader:
    """Sequential uniforms of one stream, refilled in vectorized blocks."""

    def __init__(self, key: int):
        self.key = int(key)
        self.pos = 0
        self._buf = np.empty(0)
        self._lo = 0

    def next(self) -> float:
        i = self.pos - self._lo
        if i >= self._buf.size:
            self._lo = self.pos
            counters = np.arange(self.pos, self.pos + _BUF, dtype=np.uint64)
            self._buf = uniform_array(self.key, counters)
            i = 0
        self.pos += 1
        return float(self._buf[i])


def _expm(x: float) -> float:
    # Same branch and polynomial as the accelerated backend.
    if x < 2e-3:
        return 1.0 - x * (
            1.0 - x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
        )
    return math.exp(-x)


# ---------------------------------------------------------------------------
# scalar samplers
# ---------------------------------------------------------------------------


def _normal(rd: StreamReader) -> float:
    u1 = rd.next()
    u2 = rd.next()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _gamma(rd: StreamReader, shape: float) -> float:
    if shape <= 0.0:
        return 0.0
    boost = 1.0
    a = shape
    if a < 1.0:
        boost = rd.next() ** (1.0 / a)
        a += 1.0
    d = a - 1.0 / 3.0
    cc = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _normal(rd)
        v = 1.0 + cc * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rd.next()
        if u < 1.0 - 0.0331 * x * x * x * x:
            return boost * d * v
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return boost * d * v


def _poisson(rd: StreamReader, mean: float) -> int:
    if mean <= 0.0:
        return 0
    if mean < 10.0:
        u = rd.next()
        p = math.exp(-mean)
        cdf = p
        k = 0
        while u > cdf and k < 200:
            k += 1
            p *= mean / k
            cdf += p
        return k
    b = 0.931 + 2.53 * math.sqrt(mean)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rd.next() - 0.5
        v = rd.next()
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + mean + 0.43))
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (
            math.log(v * inv_alpha / (a / (us * us) + b))
            <= k * math.log(mean) - mean - math.lgamma(k + 1.0)
        ):
            return k


def poisson_scalar(key, c0, mean):
    rd = StreamReader(int(key))
    rd.pos = int(c0)
    k = _poisson(rd, mean)
    return k, rd.pos


# ---------------------------------------------------------------------------
# renewal solver
# ---------------------------------------------------------------------------


def renewal_exp(coeff, betas, h, n):
    coeff = np.asarray(coeff, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    phi0 = float(coeff.sum())
    denom = 1.0 - 0.5 * h * phi0
    if coeff.size == 1:
        # One-pole linear recurrence, solved with a vectorized IIR filter.
        C = float(coeff[0])
        dec = math.exp(-betas[0] * h)
        i = np.arange(1, n + 1)
        ek = np.exp(-betas[0] * h * i)
        g = (C * ek * (1.0 + 0.5 * h * phi0)) / denom
        rho = dec * (1.0 + h * C / denom)
        acc = lfilter([1.0], [1.0, -rho], g)
        psi = np.empty(n + 1)
        psi[0] = phi0
        prev = np.empty(n)
        prev[0] = 0.0
        prev[1:] = acc[:-1]
        psi[1:] = g + (h * C * dec / denom) * prev
        return psi
    ncomp = coeff.size
    dec = np.exp(-betas * h)
    ek = np.ones(ncomp)
    A = np.zeros(ncomp)
    psi = np.empty(n + 1)
    psi[0] = phi0
    for i in range(1, n + 1):
        ek = ek * dec
        phi_i = float(np.dot(coeff, ek))
        rhs = float(np.dot(coeff, 0.5 * ek * psi[0] + dec * A))
        val = (phi_i + h * rhs) / denom
        psi[i] = val
        A = dec * A + val
    return psi


def renewal_general(phi_vals, h, window):
    n = phi_vals.size - 1
    psi = np.empty(n + 1)
    psi[0] = phi_vals[0]
    denom = 1.0 - 0.5 * h * phi_vals[0]
    n_clamped = 0
    for i in range(1, n + 1):
        lo = max(1, i - window)
        # sum_{lo <= j < i} phi[i-j] psi[j] == dot(phi[1:i-lo+1], psi[lo:i][::-1])
        acc = float(np.dot(phi_vals[1 : i - lo + 1], psi[lo:i][::-1]))
        rhs = phi_vals[i] * (1.0 + 0.5 * h * psi[0]) + h * acc
        val = rhs / denom
        if val < 0.0:
            val = 0.0
            n_clamped += 1
        psi[i] = val
    return psi, n_clamped


# ---------------------------------------------------------------------------
# thinning
# ---------------------------------------------------------------------------


def thin_exp_summary(
    key, mu, a_T, weights, betas, horizon, grid_times, event_cap, want_qv,
    want_comp=True,
):
    ncomp = weights.size
    excite = a_T * weights * betas
    e_tot = float(excite.sum())
    s = np.zeros(ncomp)
    betas = np.asarray(betas, dtype=np.float64)

    ngrid = grid_times.size
    lam_grid = np.empty(ngrid)
    count_grid = np.zeros(ngrid, dtype=np.int64)
    gpos = 0
    while gpos < ngrid and grid_times[gpos] <= 0.0:
        lam_grid[gpos] = mu
        gpos += 1

    rd = StreamReader(int(key))
    t = 0.0
    n = 0
    qv = 0.0
    int_lam = 0.0
    status = OK
    alive = True

    while alive:
        lam0 = mu + float(s.sum())
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = rd.next()
            u2 = rd.next()
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt
            t_stop = min(t_cand, horizon)

            while gpos < ngrid and grid_times[gpos] <= t_stop:
                dtg = grid_times[gpos] - t
                lam_g = mu
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
                s += excite
                if n >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return lam_grid, count_grid, qv, int_lam, n, status


def thin_exp_path(key, mu, a_T, weights, betas, horizon, event_cap):
    ncomp = weights.size
    excite = a_T * weights * betas
    e_tot = float(excite.sum())
    s = np.zeros(ncomp)
    rd = StreamReader(int(key))
    jumps = []
    t = 0.0
    status = OK
    alive = True

    while alive:
        lam0 = mu + float(s.sum())
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = rd.next()
            u2 = rd.next()
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
                jumps.append(t_cand)
                if len(jumps) >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
                s += excite
            t = t_cand

    return np.array(jumps, dtype=np.float64), status


def thin_powerlaw_path(key, mu, a_T, alpha, x0, trunc, horizon, event_cap):
    rd = StreamReader(int(key))
    jumps = []
    lo = 0
    t = 0.0
    status = OK
    amp = a_T * alpha * x0**alpha

    def lam_at(when, lo):
        while lo < len(jumps) and when - jumps[lo] > trunc:
            lo += 1
        arr = np.asarray(jumps[lo:])
        if arr.size == 0:
            return mu, lo
        d = when - arr
        contrib = amp / (x0 + d) ** (1.0 + alpha)
        return mu + float(np.sum(contrib[d <= trunc])), lo

    while True:
        bound, lo = lam_at(t, lo)
        u1 = rd.next()
        u2 = rd.next()
        t_cand = t + (-math.log(u1) / bound)
        if t_cand > horizon:
            break
        lam, _ = lam_at(t_cand, lo)
        if lam > bound * (1.0 + 1e-12):
            status = BOUND_VIOLATION
            break
        if u2 * bound <= lam:
            jumps.append(t_cand)
            if len(jumps) >= event_cap:
                status = CAP_EXCEEDED
                break
        t = t_cand

    return np.array(jumps, dtype=np.float64), status


def thin_biv_summary(key, mu, a_T, w1, b1, w2, b2, horizon, grid_times, event_cap):
    e1 = a_T * w1 * b1
    e2 = a_T * w2 * b2
    e_tot = e1 + e2
    sa = sb = sc = sd = 0.0
    ngrid = grid_times.size
    np_grid = np.zeros(ngrid, dtype=np.int64)
    nm_grid = np.zeros(ngrid, dtype=np.int64)
    gpos = 0
    while gpos < ngrid and grid_times[gpos] <= 0.0:
        gpos += 1

    rd = StreamReader(int(key))
    t = 0.0
    nplus = nminus = 0
    s_plus = s_minus = 0.0
    status = OK
    alive = True

    while alive:
        lam0 = 2.0 * mu + sa + sb + sc + sd
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = rd.next()
            u2 = rd.next()
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt
            t_stop = min(t_cand, horizon)

            while gpos < ngrid and grid_times[gpos] <= t_stop:
                np_grid[gpos] = nplus
                nm_grid[gpos] = nminus
                gpos += 1

            if t_cand > horizon:
                alive = False
                break

            d1 = _expm(b1 * dt)
            d2 = d1 if b2 == b1 else _expm(b2 * dt)
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
                inv = 1.0 / tot
                if v <= lam_p:
                    nplus += 1
                    s_plus += inv
                    sa += e1
                    sc += e2
                else:
                    nminus += 1
                    s_minus += inv
                    sb += e2
                    sd += e1
                if nplus + nminus >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return np_grid, nm_grid, s_plus, s_minus, nplus + nminus, status


def thin_biv_path(key, mu, a_T, w1, b1, w2, b2, horizon, event_cap):
    e1 = a_T * w1 * b1
    e2 = a_T * w2 * b2
    e_tot = e1 + e2
    sa = sb = sc = sd = 0.0
    rd = StreamReader(int(key))
    jumps = []
    marks = []
    t = 0.0
    status = OK
    alive = True

    while alive:
        lam0 = 2.0 * mu + sa + sb + sc + sd
        k_block = _block_size(lam0, e_tot)
        bound = lam0 + k_block * e_tot
        inv_bound = 1.0 / bound
        for _j in range(k_block):
            u1 = rd.next()
            u2 = rd.next()
            dt = -math.log(u1) * inv_bound
            t_cand = t + dt
            if t_cand > horizon:
                alive = False
                break
            d1 = _expm(b1 * dt)
            d2 = d1 if b2 == b1 else _expm(b2 * dt)
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
                jumps.append(t_cand)
                if v <= lam_p:
                    marks.append(1)
                    sa += e1
                    sc += e2
                else:
                    marks.append(-1)
                    sb += e2
                    sd += e1
                if len(jumps) >= event_cap:
                    status = CAP_EXCEEDED
                    alive = False
                    break
            t = t_cand

    return (
        np.array(jumps, dtype=np.float64),
        np.array(marks, dtype=np.int8),
        status,
    )


# ---------------------------------------------------------------------------
# intensity reconstruction
# ---------------------------------------------------------------------------


def intensity_at_events(jumps, mu, a_T, weights, betas):
    ncomp = weights.size
    excite = a_T * weights * betas
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
        s += excite
        t = jumps[i]
    return out


def biv_intensity_at_events(jumps, marks, mu, a_T, w1, b1, w2, b2):
    e1 = a_T * w1 * b1
    e2 = a_T * w2 * b2
    sa = sb = sc = sd = 0.0
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
# geometric random sums (vectorized over samples, wave by wave)
# ---------------------------------------------------------------------------


def geom_sums(key_base, n, a_T, T, shape_code, p1, p2, weights, betas):
    sample_keys = np.array(
        [derive_key(int(key_base), j) for j in range(n)], dtype=np.uint64
    )
    u0 = _uniform_per_key(sample_keys, 0)
    if a_T <= 0.0:
        counts = np.ones(n, dtype=np.int64)
    else:
        counts = 1 + (np.log(u0) / math.log(a_T)).astype(np.int64)
        counts = np.maximum(counts, 1)
    total = np.zeros(n)
    kmax = int(counts.max())
    weights = np.asarray(weights, dtype=np.float64)
    cum_w = np.cumsum(weights)
    c = 1
    for k in range(1, kmax + 1):
        active = counts >= k
        keys_a = sample_keys[active]
        if shape_code == 0:
            u = _uniform_per_key(keys_a, c)
            c += 1
            total[active] += -np.log(u) / p1
        elif shape_code == 1:
            u = _uniform_per_key(keys_a, c)
            c += 1
            total[active] += p2 * (u ** (-1.0 / p1) - 1.0)
        else:
            uc = _uniform_per_key(keys_a, c)
            ux = _uniform_per_key(keys_a, c + 1)
            c += 2
            comp = np.searchsorted(cum_w, uc)
            comp = np.minimum(comp, weights.size - 1)
            total[active] += -np.log(ux) / np.asarray(betas)[comp]
    return total / T


def _uniform_per_key(keys: np.ndarray, counter: int) -> np.ndarray:
    """Draw `counter` of each stream in `keys` (vectorized)."""
    z = keys + (np.uint64(counter) + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# ---------------------------------------------------------------------------
# CIR sampling
# ---------------------------------------------------------------------------


def _cir_step_rd(rd: StreamReader, x, ef, cscale, dof):
    nc = x * ef / cscale
    if dof > 1.0:
        z = _normal(rd)
        g = _gamma(rd, 0.5 * (dof - 1.0))
        rt = math.sqrt(nc)
        return cscale * ((z + rt) * (z + rt) + 2.0 * g)
    k = _poisson(rd, 0.5 * nc)
    g = _gamma(rd, 0.5 * dof + k)
    return cscale * 2.0 * g


def cir_path_exact(key, kappa, theta, nu, x0, dt, n_steps):
    xs = np.empty(n_steps + 1)
    xs[0] = x0
    if nu <= 0.0:
        ef = math.exp(-kappa * dt)
        for i in range(1, n_steps + 1):
            xs[i] = theta + (xs[i - 1] - theta) * ef
        return xs
    ef = math.exp(-kappa * dt)
    cscale = nu * nu * (1.0 - ef) / (4.0 * kappa)
    dof = 4.0 * kappa * theta / (nu * nu)
    rd = StreamReader(int(key))
    x = x0
    for i in range(1, n_steps + 1):
        x = _cir_step_rd(rd, x, ef, cscale, dof)
        xs[i] = x
    return xs


def cir_path_euler(key, kappa, theta, nu, x0, dt, n_steps):
    xs = np.empty(n_steps + 1)
    xs[0] = x0
    rd = StreamReader(int(key))
    x = x0
    sq_dt = math.sqrt(dt)
    for i in range(1, n_steps + 1):
        xp = x if x > 0.0 else 0.0
        z = _normal(rd)
        x = x + kappa * (theta - xp) * dt + nu * math.sqrt(xp) * sq_dt * z
        xs[i] = x
    return xs


def cir_step_single(key, x, kappa, theta, nu, dt):
    if nu <= 0.0:
        return theta + (x - theta) * math.exp(-kappa * dt)
    ef = math.exp(-kappa * dt)
    cscale = nu * nu * (1.0 - ef) / (4.0 * kappa)
    dof = 4.0 * kappa * theta / (nu * nu)
    rd = StreamReader(int(key))
    return _cir_step_rd(rd, x, ef, cscale, dof)
