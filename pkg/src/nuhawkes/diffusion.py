"""Limit diffusions: CIR intensity, integrated CIR, and the Heston pair.

The CIR sampler draws the exact transition (scaled noncentral chi-square:
a shifted-normal square plus a central part for d > 1, a Poisson mixture of
central chi-squares for d <= 1), so limit-theorem comparisons carry no
discretization bias on the diffusion side.  A full-truncation Euler scheme is
kept behind ``scheme="euler"`` purely as a differential-testing oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _hot
from ._rng import TAG_DIFFUSION, derive_key, path_key, uniform_array
from .errors import ValidationError
from .grid import GridFunction, n_steps


@dataclass(frozen=True)
class CIRParams:
    """dX = kappa (theta - X) dt + nu sqrt(X) dB."""

    kappa: float
    theta: float
    nu: float
    x0: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValidationError("kappa must be positive")
        if self.theta < 0 or self.x0 < 0 or self.nu < 0:
            raise ValidationError("theta, nu and x0 must be nonnegative")

    @classmethod
    def from_hawkes_regime(cls, lam: float, m: float, mu: float) -> "CIRParams":
        """Intensity-limit map: kappa = lam/m, theta = mu, nu = sqrt(lam)/m."""
        return cls(kappa=lam / m, theta=mu, nu=math.sqrt(lam) / m, x0=0.0)

    @classmethod
    def from_price_regime(cls, lam: float, m: float, mu: float) -> "CIRParams":
        """Variance limit of the bivariate price model:
        kappa = lam/m, theta = 2 mu / lam, nu = 1/m."""
        return cls(kappa=lam / m, theta=2.0 * mu / lam, nu=1.0 / m, x0=0.0)

    def to_hawkes_regime(self):
        """(lam, m, mu) recovered from (kappa, nu, theta); exact inverse."""
        lam = self.kappa**2 / self.nu**2
        m = self.kappa / self.nu**2
        return lam, m, self.theta

    @property
    def dof(self) -> float:
        return 4.0 * self.kappa * self.theta / self.nu**2


@dataclass(frozen=True)
class HestonParams:
    cir: CIRParams
    price_scale: float
    p0: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.price_scale) or self.price_scale <= 0:
            raise ValidationError("price scale must be positive and finite")


@dataclass(frozen=True)
class CIRPath:
    x: GridFunction
    integrated: GridFunction  # trapezoidal running integral of x


def cir_mean(params: CIRParams, t, x0=None):
    """E[X_t | X_0 = x0] = theta + (x0 - theta) exp(-kappa t)."""
    x0 = params.x0 if x0 is None else x0
    return params.theta + (x0 - params.theta) * np.exp(-params.kappa * np.asarray(t))


def cir_variance(params: CIRParams, t, x0=None):
    """Conditional variance of X_t from x0 (closed form)."""
    x0 = params.x0 if x0 is None else x0
    k, nu, theta = params.kappa, params.nu, params.theta
    e = np.exp(-k * np.asarray(t))
    return x0 * (nu**2 / k) * (e - e**2) + theta * (nu**2 / (2 * k)) * (1 - e) ** 2


def cir_exact_step(params: CIRParams, x: float, dt: float, seed: int) -> float:
    """One exact draw of X_{t+dt} given X_t = x; output is >= 0 always."""
    if x < 0 or dt <= 0:
        raise ValidationError("need x >= 0 and dt > 0")
    key = np.uint64(derive_key(seed, TAG_DIFFUSION))
    return float(
        _hot.cir_step_single(key, x, params.kappa, params.theta, params.nu, dt)
    )


def cir_path(
    params: CIRParams,
    horizon: float,
    step: float,
    seed: int,
    path_index: int = 0,
    scheme: str = "exact",
) -> CIRPath:
    """Grid path chaining exact transitions, plus its integrated path."""
    n = n_steps(horizon, step)
    key = np.uint64(path_key(seed, TAG_DIFFUSION, path_index))
    if scheme == "exact":
        xs = _hot.cir_path_exact(
            key, params.kappa, params.theta, params.nu, params.x0, step, n
        )
    elif scheme == "euler":
        xs = _hot.cir_path_euler(
            key, params.kappa, params.theta, params.nu, params.x0, step, n
        )
    else:
        raise ValidationError(f"unknown scheme {scheme!r}")
    xg = GridFunction(step=step, values=xs)
    return CIRPath(x=xg, integrated=xg.cumulative())


def heston_paths(
    params: HestonParams,
    horizon: float,
    step: float,
    seed: int,
    path_index: int = 0,
):
    """(C, P): exact CIR variance path and the driftless price path with
    conditionally Gaussian increments Var = price_scale^2 * int C dt
    (trapezoid within each step); the two Brownian drivers are independent."""
    cpath = cir_path(params.cir, horizon, step, seed, path_index)
    c_vals = cpath.x.values
    n = c_vals.size - 1
    pkey = derive_key(path_key(seed, TAG_DIFFUSION, path_index), TAG_DIFFUSION)
    u = uniform_array(pkey, np.arange(2 * n, dtype=np.uint64))
    z = np.sqrt(-2.0 * np.log(u[0::2])) * np.cos(2.0 * np.pi * u[1::2])
    var = params.price_scale**2 * 0.5 * step * (c_vals[:-1] + c_vals[1:])
    increments = np.sqrt(var) * z
    p = np.empty(n + 1)
    p[0] = params.p0
    np.cumsum(increments, out=p[1:])
    p[1:] += params.p0
    return cpath.x, GridFunction(step=step, values=p)


def cir_marginal_cdf(params: CIRParams, t: float, x) -> np.ndarray:
    """CDF of X_t given X_0 = params.x0 (noncentral chi-square transition;
    the x0 = 0 start degenerates to a gamma law)."""
    k, nu, theta, x0 = params.kappa, params.nu, params.theta, params.x0
    if nu <= 0:
        raise ValidationError("marginal CDF needs nu > 0")
    ef = math.exp(-k * t)
    c = nu**2 * (1.0 - ef) / (4.0 * k)
    d = params.dof
    x_arr = np.asarray(x, dtype=np.float64)
    if x0 == 0.0:
        return stats.gamma.cdf(x_arr, a=0.5 * d, scale=2.0 * c)
    return stats.ncx2.cdf(x_arr / c, df=d, nc=x0 * ef / c)


def cir_marginal_sample(params: CIRParams, t: float, n: int, seed: int) -> np.ndarray:
    """n independent exact draws of X_t from x0 (one-transition sampling)."""
    out = np.empty(n)
    for i in range(n):
        key = np.uint64(path_key(seed, TAG_DIFFUSION, i))
        out[i] = _hot.cir_step_single(
            key, params.x0, params.kappa, params.theta, params.nu, t
        )
    return out
