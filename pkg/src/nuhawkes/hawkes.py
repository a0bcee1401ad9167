"""Hawkes-process simulators: Ogata thinning and the cluster construction.

Both simulators are exact in law and validated against each other.  Thinning
exploits that all admitted kernels are nonincreasing, so the intensity just
after the last event dominates until the next one; exponential-family kernels
additionally get O(1) Markovian state updates.  The cluster simulator builds
generations of a branching process with Poisson immigration and is fully
vectorized.

Paths are pure functions of (configuration, seed, path_index); path streams
are derived with counter-based keys, so concurrent generation is
reproducible independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _fallback, _hot
from ._rng import (
    TAG_CLUSTER,
    TAG_GENERATION,
    TAG_IMMIGRANTS,
    TAG_THINNING,
    derive_key,
    path_key,
    uniform_array,
)
from .errors import (
    BoundViolation,
    GenerationOverflow,
    UnmarkedPath,
    ValidationError,
)
from .grid import GridFunction, n_steps
from .kernels import Exponential, KernelSpec, PowerLaw, SumOfExponentials

DEFAULT_EVENT_CAP = 10_000_000


@dataclass(frozen=True)
class PointPath:
    """A realized point-process trajectory on (0, horizon]."""

    horizon: float
    jumps: np.ndarray
    marks: Optional[np.ndarray] = None  # +1 / -1 for bivariate paths
    seed_tag: str = ""

    def __post_init__(self):
        jumps = np.asarray(self.jumps, dtype=np.float64)
        jumps.setflags(write=False)
        object.__setattr__(self, "jumps", jumps)
        if self.horizon <= 0:
            raise ValidationError("horizon must be positive")
        if jumps.size:
            if jumps[0] <= 0 or jumps[-1] > self.horizon:
                raise ValidationError("jumps must lie in (0, horizon]")
            if np.any(np.diff(jumps) <= 0):
                raise ValidationError("jumps must be strictly increasing")
        if self.marks is not None:
            marks = np.asarray(self.marks, dtype=np.int8)
            marks.setflags(write=False)
            object.__setattr__(self, "marks", marks)
            if marks.size != jumps.size:
                raise ValidationError("marks length must match jumps")
            if marks.size and not np.all(np.abs(marks) == 1):
                raise ValidationError("marks must be +1 or -1")

    @property
    def n_events(self) -> int:
        return int(self.jumps.size)

    def counts_at(self, times) -> np.ndarray:
        """N_t at the given times (jumps at exactly t are counted)."""
        return np.searchsorted(self.jumps, np.asarray(times), side="right")

    def split_marks(self):
        if self.marks is None:
            raise UnmarkedPath("path carries no +/- marks")
        return self.jumps[self.marks > 0], self.jumps[self.marks < 0]


@dataclass(frozen=True)
class BivariateKernelSpec:
    """Self/cross excitation pair (phi1, phi2) = (w1 g1, w2 g2) with
    normalized total mass w1 + w2 = 1 and branching ratio a_T."""

    shape1: Exponential
    weight1: float
    shape2: Exponential
    weight2: float
    a_T: float

    def __post_init__(self):
        if not 0 <= self.a_T < 1:
            raise ValidationError(f"a_T must lie in [0, 1), got {self.a_T}")
        w1, w2 = float(self.weight1), float(self.weight2)
        if w1 < 0 or w2 <= 0:
            # phi2 must carry mass: the price model needs cross excitation.
            raise ValidationError("need weight1 >= 0 and weight2 > 0")
        total = w1 + w2
        object.__setattr__(self, "weight1", w1 / total)
        object.__setattr__(self, "weight2", w2 / total)
        for s in (self.shape1, self.shape2):
            if not isinstance(s, Exponential):
                raise ValidationError(
                    "the bivariate engine supports Exponential shapes"
                )

    @property
    def joint_mean(self) -> float:
        m1 = KernelSpec(self.shape1, 0.0).mean
        m2 = KernelSpec(self.shape2, 0.0).mean
        return self.weight1 * m1 + self.weight2 * m2

    @property
    def signed_norm(self) -> float:
        """L1 norm of phi = phi1 - phi2, i.e. w1 - w2."""
        return self.weight1 - self.weight2

    @property
    def price_scale(self) -> float:
        """Heston price diffusion coefficient 1/(1 - |phi|_1)."""
        return 1.0 / (1.0 - self.signed_norm)

    def total_kernel(self) -> KernelSpec:
        """Kernel of N+ + N-: a_T (phi1 + phi2), a univariate Hawkes kernel."""
        comps = ((self.weight1, self.shape1.beta), (self.weight2, self.shape2.beta))
        return KernelSpec(SumOfExponentials(comps), self.a_T)


def _seed_tag(seed: int, name: str, index: int) -> str:
    return f"{seed}/{name}/{index}"


def _check_status(status: int) -> None:
    if status == _hot.CAP_EXCEEDED:
        raise GenerationOverflow(
            "event cap exceeded; a_T is too close to 1 for this horizon"
        )
    if status == _hot.BOUND_VIOLATION:
        raise BoundViolation("candidate intensity exceeded its thinning bound")


def simulate_thinning(
    kernel: KernelSpec,
    mu: float,
    horizon: float,
    seed: int,
    path_index: int = 0,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> PointPath:
    """Exact-in-law univariate path via Ogata thinning.

    The dominating bound is the intensity just after the last event,
    refreshed at every candidate; it is exact for nonincreasing kernels.
    """
    if mu <= 0:
        raise ValidationError("mu must be positive")
    key = np.uint64(path_key(seed, TAG_THINNING, path_index))
    comps = kernel.exp_components()
    if comps is not None:
        w, b = comps
        jumps, status = _hot.thin_exp_path(
            key, mu, kernel.a_T, w, b, horizon, event_cap
        )
    else:
        s = kernel.shape
        jumps, status = _hot.thin_powerlaw_path(
            key,
            mu,
            kernel.a_T,
            s.alpha,
            s.x0,
            kernel.truncation_horizon,
            horizon,
            event_cap,
        )
    _check_status(status)
    return PointPath(
        horizon=horizon, jumps=jumps, seed_tag=_seed_tag(seed, "thinning", path_index)
    )


def _vector_poisson(u: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Poisson counts by single-uniform inversion, vectorized (mean <= ~1)."""
    p = np.exp(-mean)
    cdf = p.copy()
    k = np.zeros(u.size, dtype=np.int64)
    active = u > cdf
    step = 0
    while np.any(active) and step < 64:
        step += 1
        k[active] += 1
        p[active] *= mean[active] / step
        cdf[active] += p[active]
        active = u > cdf
    return k


def simulate_cluster(
    kernel: KernelSpec,
    mu: float,
    horizon: float,
    seed: int,
    path_index: int = 0,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> PointPath:
    """Exact-in-law univariate path via the branching construction.

    Immigrants arrive Poisson(mu) on [0, H]; every event spawns children from
    an inhomogeneous Poisson process with intensity a_T phi(. - parent),
    truncated at the horizon.  Generations are built in order, vectorized
    across all parents of a generation.
    """
    if mu <= 0:
        raise ValidationError("mu must be positive")
    pkey = path_key(seed, TAG_CLUSTER, path_index)
    imm_key = derive_key(pkey, TAG_IMMIGRANTS)
    n_imm, ctr = _fallback.poisson_scalar(imm_key, 0, mu * horizon)
    times = horizon * uniform_array(
        imm_key, np.arange(ctr, ctr + n_imm, dtype=np.uint64)
    )
    events = [times]
    parents = times
    total = n_imm
    gen = 0
    gen_base = derive_key(pkey, TAG_GENERATION)
    a_T = kernel.a_T

    while parents.size and a_T > 0:
        gkey = derive_key(gen_base, gen)
        npar = parents.size
        window = np.minimum(horizon - parents, kernel.truncation_horizon)
        born = []
        counter = 0
        if kernel.exp_components() is not None:
            w, b = kernel.exp_components()
            masses = []
            counts = []
            for ci in range(w.size):
                mass_c = 1.0 - np.exp(-b[ci] * window)
                u = uniform_array(
                    gkey, np.arange(counter, counter + npar, dtype=np.uint64)
                )
                counter += npar
                counts.append(_vector_poisson(u, a_T * w[ci] * mass_c))
                masses.append(mass_c)
            for ci in range(w.size):
                tot_c = int(counts[ci].sum())
                if tot_c == 0:
                    continue
                u = uniform_array(
                    gkey, np.arange(counter, counter + tot_c, dtype=np.uint64)
                )
                counter += tot_c
                rep_parent = np.repeat(parents, counts[ci])
                rep_mass = np.repeat(masses[ci], counts[ci])
                offsets = -np.log1p(-u * rep_mass) / b[ci]
                born.append(rep_parent + offsets)
        else:
            s = kernel.shape
            mass = 1.0 - (s.x0 / (s.x0 + window)) ** s.alpha
            u = uniform_array(gkey, np.arange(counter, counter + npar, dtype=np.uint64))
            counter += npar
            cnt = _vector_poisson(u, a_T * mass)
            tot_c = int(cnt.sum())
            if tot_c:
                u = uniform_array(
                    gkey, np.arange(counter, counter + tot_c, dtype=np.uint64)
                )
                counter += tot_c
                rep_parent = np.repeat(parents, cnt)
                rep_mass = np.repeat(mass, cnt)
                offsets = s.x0 * ((1.0 - u * rep_mass) ** (-1.0 / s.alpha) - 1.0)
                born.append(rep_parent + offsets)

        children = np.concatenate(born) if born else np.empty(0)
        total += children.size
        if total > event_cap:
            raise GenerationOverflow(
                f"cluster simulation exceeded the event cap {event_cap}"
            )
        events.append(children)
        parents = children
        gen += 1

    jumps = np.sort(np.concatenate(events))
    # Exact float ties across branches are astronomically rare; nudge rather
    # than violate the strict-increase invariant.
    ties = np.flatnonzero(np.diff(jumps) <= 0)
    for i in ties:
        jumps[i + 1] = np.nextafter(jumps[i], np.inf)
    jumps = jumps[jumps <= horizon]
    return PointPath(
        horizon=horizon, jumps=jumps, seed_tag=_seed_tag(seed, "cluster", path_index)
    )


def simulate_bivariate(
    kernels: BivariateKernelSpec,
    mu: float,
    horizon: float,
    seed: int,
    path_index: int = 0,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> PointPath:
    """Exact-in-law sample of (N+, N-) by two-stream thinning; marks record
    the stream and the two streams never share a jump."""
    if mu <= 0:
        raise ValidationError("mu must be positive")
    key = np.uint64(path_key(seed, TAG_THINNING, path_index))
    jumps, marks, status = _hot.thin_biv_path(
        key,
        mu,
        kernels.a_T,
        kernels.weight1,
        kernels.shape1.beta,
        kernels.weight2,
        kernels.shape2.beta,
        horizon,
        event_cap,
    )
    _check_status(status)
    return PointPath(
        horizon=horizon,
        jumps=jumps,
        marks=marks,
        seed_tag=_seed_tag(seed, "bivariate", path_index),
    )


# ---------------------------------------------------------------------------
# intensity evaluation on grids and at jumps
# ---------------------------------------------------------------------------


def _exp_intensity_grid(jumps, mu, a_T, w, b, step, n) -> np.ndarray:
    """Left-limit intensity on {0, step, ..., n*step} for exponential shapes.

    Events are binned to the first strictly later grid point; within-component
    decayed sums then satisfy a one-pole recurrence over grid cells.
    """
    from scipy.signal import lfilter

    grid = step * np.arange(n + 1)
    lam = np.full(n + 1, mu)
    if jumps.size == 0:
        return lam
    idx = np.searchsorted(grid, jumps, side="right")  # first grid index > J
    keep = idx <= n
    idx = idx[keep]
    jk = jumps[keep]
    for ci in range(w.size):
        scale = a_T * w[ci] * b[ci]
        contrib = scale * np.exp(-b[ci] * (grid[idx] - jk))
        binned = np.bincount(idx, weights=contrib, minlength=n + 1)
        dec = np.exp(-b[ci] * step)
        # S_k = dec * S_{k-1} + binned_k
        lam += lfilter([1.0], [1.0, -dec], binned)
    return lam


def intensity_path(
    path: PointPath,
    kernel,
    mu: float,
    grid_step: float,
):
    """lambda on the uniform grid covering [0, horizon] (left limits: a jump
    at a grid time contributes only to later grid points).

    Univariate kernels give one GridFunction; a BivariateKernelSpec gives
    the pair (lambda+, lambda-).
    """
    n = n_steps(path.horizon, grid_step)
    if isinstance(kernel, BivariateKernelSpec):
        plus, minus = path.split_marks()
        w1, w2 = kernel.weight1, kernel.weight2
        b1, b2 = kernel.shape1.beta, kernel.shape2.beta
        w_self = np.array([w1])
        b_self = np.array([b1])
        w_cross = np.array([w2])
        b_cross = np.array([b2])
        lam_p = (
            mu
            + _exp_intensity_grid(plus, 0.0, kernel.a_T, w_self, b_self, grid_step, n)
            + _exp_intensity_grid(minus, 0.0, kernel.a_T, w_cross, b_cross, grid_step, n)
        )
        lam_m = (
            mu
            + _exp_intensity_grid(plus, 0.0, kernel.a_T, w_cross, b_cross, grid_step, n)
            + _exp_intensity_grid(minus, 0.0, kernel.a_T, w_self, b_self, grid_step, n)
        )
        return (
            GridFunction(step=grid_step, values=lam_p),
            GridFunction(step=grid_step, values=lam_m),
        )

    comps = kernel.exp_components()
    if comps is not None:
        w, b = comps
        lam = _exp_intensity_grid(path.jumps, mu, kernel.a_T, w, b, grid_step, n)
    else:
        grid = grid_step * np.arange(n + 1)
        lam = np.full(n + 1, float(mu))
        jumps = path.jumps
        for k in range(1, n + 1):
            d = grid[k] - jumps[jumps < grid[k]]
            d = d[d <= kernel.truncation_horizon]
            if d.size:
                lam[k] += float(np.sum(kernel.a_T * kernel.base_density(d)))
    return GridFunction(step=grid_step, values=lam)


def intensity_at_jumps(path: PointPath, kernel: KernelSpec, mu: float) -> np.ndarray:
    """Left limits lambda(J-) at the path's own jumps (exponential family)."""
    comps = kernel.exp_components()
    if comps is None:
        raise ValidationError("left-limit recursion requires exponential shapes")
    w, b = comps
    return _hot.intensity_at_events(path.jumps, mu, kernel.a_T, w, b)


def bivariate_intensity_at_jumps(path: PointPath, kernels: BivariateKernelSpec, mu: float):
    if path.marks is None:
        raise UnmarkedPath("need a marked bivariate path")
    return _hot.biv_intensity_at_events(
        path.jumps,
        path.marks,
        mu,
        kernels.a_T,
        kernels.weight1,
        kernels.shape1.beta,
        kernels.weight2,
        kernels.shape2.beta,
    )


def compensator_at_horizon(path: PointPath, kernel: KernelSpec, mu: float) -> float:
    """Exact integral of lambda over [0, horizon] given the realized jumps."""
    window = np.minimum(path.horizon - path.jumps, kernel.truncation_horizon)
    return float(
        mu * path.horizon + kernel.a_T * np.sum(kernel.base_integrated(window))
    )


# ---------------------------------------------------------------------------
# streaming per-path summaries (no jump storage), used by the experiments
# ---------------------------------------------------------------------------


def summarize_thinning(
    kernel: KernelSpec,
    mu: float,
    horizon: float,
    grid_times: np.ndarray,
    seed: int,
    path_index: int,
    event_cap: int = 2**62,
    want_qv: bool = False,
    want_comp: bool = True,
):
    """One thinning path reduced to (lambda at grid, counts at grid,
    sum over jumps of 1/lambda(J-), exact compensator integral, n_events).

    The two accumulators are optional: disabling them saves per-event work
    without touching the random stream.
    """
    comps = kernel.exp_components()
    if comps is None:
        raise ValidationError("streaming summaries require exponential shapes")
    w, b = comps
    key = np.uint64(path_key(seed, TAG_THINNING, path_index))
    lam_grid, counts, qv, int_lam, n, status = _hot.thin_exp_summary(
        key, mu, kernel.a_T, w, b, horizon, np.asarray(grid_times, dtype=np.float64),
        event_cap, want_qv, want_comp
    )
    _check_status(status)
    return lam_grid, counts, qv, int_lam, n


def summarize_bivariate(
    kernels: BivariateKernelSpec,
    mu: float,
    horizon: float,
    grid_times: np.ndarray,
    seed: int,
    path_index: int,
    event_cap: int = 2**62,
):
    """One bivariate path reduced to (N+ at grid, N- at grid, and the jump
    sums of 1/(lam+ + lam-) split by stream)."""
    key = np.uint64(path_key(seed, TAG_THINNING, path_index))
    np_grid, nm_grid, s_plus, s_minus, n, status = _hot.thin_biv_summary(
        key,
        mu,
        kernels.a_T,
        kernels.weight1,
        kernels.shape1.beta,
        kernels.weight2,
        kernels.shape2.beta,
        horizon,
        np.asarray(grid_times, dtype=np.float64),
        event_cap,
    )
    _check_status(status)
    return np_grid, nm_grid, s_plus, s_minus, n
