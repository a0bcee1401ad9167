"""Recovering (lambda, m, mu) from a rescaled intensity path.

The estimator is weighted conditional least squares on the Euler regression
``X_{t+dt} - X_t = kappa (theta - X_t) dt + eps`` with ``Var(eps | X_t) =
nu^2 X_t dt``: closed-form, no special functions, adequate at the 15-25%
tolerances this toolkit claims.  Several independent paths may be pooled in
one regression; a single path on [0, 1] carries too little mean-reversion
information to pin kappa down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .diffusion import CIRParams
from .errors import DegenerateEstimate, OutOfRange, ValidationError
from .grid import GridFunction

WEIGHT_FLOOR_FRACTION = 1e-6  # floor = fraction * path mean, clamps 1/X weights


@dataclass(frozen=True)
class CIREstimate:
    kappa_hat: float
    theta_hat: float
    nu_hat: float
    se_kappa: float
    se_theta: float
    se_nu2: float
    n_increments: int

    @property
    def nu2_hat(self) -> float:
        return self.nu_hat**2

    @property
    def lambda_hat(self) -> float:
        return self.kappa_hat**2 / self.nu2_hat

    @property
    def m_hat(self) -> float:
        return self.kappa_hat / self.nu2_hat

    @property
    def mu_hat(self) -> float:
        return self.theta_hat

    @property
    def se_lambda(self) -> float:
        # delta method, treating kappa_hat and nu2_hat as uncorrelated
        rel = math.sqrt(
            (2.0 * self.se_kappa / self.kappa_hat) ** 2
            + (self.se_nu2 / self.nu2_hat) ** 2
        )
        return rel * self.lambda_hat

    @property
    def se_m(self) -> float:
        rel = math.sqrt(
            (self.se_kappa / self.kappa_hat) ** 2 + (self.se_nu2 / self.nu2_hat) ** 2
        )
        return rel * self.m_hat

    def params(self, x0: float = 0.0) -> CIRParams:
        return CIRParams(self.kappa_hat, self.theta_hat, self.nu_hat, x0)

    def to_dict(self) -> dict:
        return {
            "kappa_hat": self.kappa_hat,
            "theta_hat": self.theta_hat,
            "nu_hat": self.nu_hat,
            "nu2_hat": self.nu2_hat,
            "se_kappa": self.se_kappa,
            "se_theta": self.se_theta,
            "se_nu2": self.se_nu2,
            "lambda_hat": self.lambda_hat,
            "m_hat": self.m_hat,
            "mu_hat": self.mu_hat,
            "se_lambda": self.se_lambda,
            "se_m": self.se_m,
            "n_increments": self.n_increments,
        }


def estimate_cir(
    path: Union[GridFunction, Sequence[GridFunction]], dt: float = None
) -> CIREstimate:
    """Weighted conditional least squares for (kappa, theta, nu^2).

    ``path`` is one GridFunction or a sequence of independent ones pooled in
    a single regression (cross-path boundaries contribute no increments).
    Raises DegenerateEstimate when the fit is singular or yields
    non-positive kappa or nu^2.
    """
    paths = [path] if isinstance(path, GridFunction) else list(path)
    if not paths:
        raise ValidationError("need at least one path")
    if dt is None:
        dt = paths[0].step
    xs = []
    dxs = []
    for p in paths:
        if abs(p.step - dt) > 1e-12 * dt:
            raise ValidationError("all paths must share the grid step dt")
        v = p.values
        if np.any(v < 0):
            raise ValidationError("CIR paths must be nonnegative")
        xs.append(v[:-1])
        dxs.append(np.diff(v))
    x = np.concatenate(xs)
    dx = np.concatenate(dxs)
    n = x.size
    if n < 200:
        raise ValidationError("need at least 200 grid points")

    floor = WEIGHT_FLOOR_FRACTION * max(float(np.mean(x)), np.finfo(float).tiny)
    w = 1.0 / np.maximum(x, floor)

    # design [1, -x] against dx: dx = b1 - b2 x + eps
    s_w = float(np.sum(w))
    s_wx = float(np.sum(w * x))
    s_wxx = float(np.sum(w * x * x))
    s_wy = float(np.sum(w * dx))
    s_wxy = float(np.sum(w * x * dx))
    det = s_w * s_wxx - s_wx * s_wx
    if det <= 0 or not np.isfinite(det):
        raise DegenerateEstimate("singular weighted design (constant path?)")
    b1 = (s_wxx * s_wy - s_wx * s_wxy) / det
    b2 = -(s_w * s_wxy - s_wx * s_wy) / det

    kappa = b2 / dt
    if kappa <= 0 or b1 <= 0:
        raise DegenerateEstimate("non-positive mean reversion")
    theta = b1 / b2

    resid = dx - (b1 - b2 * x)
    nu2 = float(np.sum(w * resid**2)) / (n - 2) / dt
    if nu2 <= 0:
        raise DegenerateEstimate("non-positive squared vol-of-vol")

    # sandwich covariance of (b1, b2)
    xtwx_inv = np.array([[s_wxx, s_wx], [s_wx, s_w]]) / det
    r2w2 = w * w * resid**2
    m11 = float(np.sum(r2w2))
    m12 = float(np.sum(r2w2 * -x))
    m22 = float(np.sum(r2w2 * x * x))
    meat = np.array([[m11, m12], [m12, m22]])
    cov = xtwx_inv @ meat @ xtwx_inv
    se_b1 = math.sqrt(max(cov[0, 0], 0.0))
    se_b2 = math.sqrt(max(cov[1, 1], 0.0))
    cov_b1b2 = cov[0, 1]

    se_kappa = se_b2 / dt
    # theta = b1/b2: first-order propagation
    se_theta = abs(theta) * math.sqrt(
        max(
            (se_b1 / b1) ** 2
            + (se_b2 / b2) ** 2
            - 2.0 * cov_b1b2 / (b1 * b2),
            0.0,
        )
    )
    se_nu2 = float(np.std(w * resid**2, ddof=1)) / math.sqrt(n) / dt

    return CIREstimate(
        kappa_hat=kappa,
        theta_hat=theta,
        nu_hat=math.sqrt(nu2),
        se_kappa=se_kappa,
        se_theta=se_theta,
        se_nu2=se_nu2,
        n_increments=n,
    )


def implied_branching_ratio(est: CIREstimate, T: float):
    """(a_T_hat, standard error) read off as 1 - lambda_hat / T."""
    if est.lambda_hat <= 0:
        raise OutOfRange("lambda_hat must be positive")
    if T <= est.lambda_hat:
        raise OutOfRange(f"T={T} must exceed lambda_hat={est.lambda_hat}")
    a_hat = 1.0 - est.lambda_hat / T
    if not 0.0 < a_hat < 1.0:
        raise OutOfRange(f"implied branching ratio {a_hat} outside (0, 1)")
    return a_hat, est.se_lambda / T
