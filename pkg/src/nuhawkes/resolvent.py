"""Renewal resolvent psi_T, the rescaled density rho_T, and their transforms.

``psi_T = sum_{k>=1} (phi_T)^{*k}`` solves ``psi = phi_T + phi_T * psi``; it
is computed by trapezoidal convolution with forward substitution (in-place
causality, no spectral ringing).  For exponential-family kernels the
convolution collapses to decayed running sums, giving the same trapezoid
values in O(n).  ``rho_T(x) = T psi_T(Tx) / |psi_T|_1`` is the density of the
rescaled geometric random sum whose limit laws the package verifies.
"""

from __future__ import annotations

import math

import numpy as np

from . import _hot
from ._rng import TAG_GEOMSUM, derive_key
from .errors import ClampBudgetExceeded, StepTooCoarse, ValidationError
from .grid import GridFunction, n_steps
from .kernels import Exponential, KernelSpec, PowerLaw, RegimeSpec, eval_kernel

CLAMP_BUDGET = 1e-3  # fraction of grid points that may be clamped to zero


def default_step(kernel: KernelSpec) -> float:
    """Default renewal grid step: a fiftieth of the kernel time scale."""
    return kernel.time_scale / 50.0


def resolvent_l1(kernel: KernelSpec) -> float:
    """Exact L1 norm a_T / (1 - a_T) of the resolvent."""
    return kernel.a_T / (1.0 - kernel.a_T)


def compute_resolvent(kernel: KernelSpec, horizon: float, step: float = None) -> GridFunction:
    """psi_T sampled on {0, step, ..., horizon}.

    Raises StepTooCoarse when the step cannot resolve the kernel scale
    (step > time_scale / 10); raises ClampBudgetExceeded when more than 0.1%
    of grid points needed clamping to zero (solver failure, not round-off).
    """
    if not kernel.a_T < 1:
        raise ValidationError("resolvent requires a_T < 1")
    if step is None:
        step = default_step(kernel)
    if step > kernel.time_scale / 10.0:
        raise StepTooCoarse(
            f"step {step} exceeds kernel time scale / 10 = {kernel.time_scale / 10.0}"
        )
    n = n_steps(horizon, step)
    comps = kernel.exp_components()
    if comps is not None:
        w, b = comps
        coeff = kernel.a_T * w * b
        vals = _hot.renewal_exp(coeff, b, step, n)
        vals = np.maximum(vals, 0.0)
    else:
        phi_vals = eval_kernel(kernel, np.arange(n + 1) * step)
        window = min(n, int(math.ceil(kernel.truncation_horizon / step)))
        vals, n_clamped = _hot.renewal_general(np.asarray(phi_vals), step, window)
        if n_clamped > CLAMP_BUDGET * (n + 1):
            raise ClampBudgetExceeded(
                f"{n_clamped} of {n + 1} resolvent values clamped to zero"
            )
    return GridFunction(step=step, values=vals)


def exp_resolvent_closed_form(kernel: KernelSpec, t) -> np.ndarray:
    """a_T beta exp(-beta (1 - a_T) t), valid for single-exponential shapes."""
    if not isinstance(kernel.shape, Exponential):
        raise ValidationError("closed form requires an Exponential shape")
    beta = kernel.shape.beta
    return kernel.a_T * beta * np.exp(-beta * (1.0 - kernel.a_T) * np.asarray(t))


def rho_density(
    kernel: KernelSpec,
    regime: RegimeSpec,
    horizon_rescaled: float,
    step: float,
) -> GridFunction:
    """rho_T on the rescaled grid {0, step, ..., horizon_rescaled}.

    The values integrate to at most one; the deficit is the resolvent mass
    beyond T * horizon_rescaled.
    """
    _check_regime_kernel(kernel, regime)
    psi = compute_resolvent(kernel, regime.T * horizon_rescaled, regime.T * step)
    vals = regime.T * psi.values / resolvent_l1(kernel)
    return GridFunction(step=step, values=vals)


def rho_limit_density(kernel: KernelSpec, regime: RegimeSpec, x) -> np.ndarray:
    """Exponential limit density (lambda/m) exp(-x lambda/m) of rho_T."""
    rate = regime.lam / kernel.mean
    return rate * np.exp(-rate * np.asarray(x))


def rho_cf(kernel: KernelSpec, regime: RegimeSpec, z):
    """Closed-form characteristic function of the rescaled geometric sum:
    rho_hat(z) = phihat(z/T) / (1 - (a_T/(1-a_T)) (phihat(z/T) - 1))."""
    _check_regime_kernel(kernel, regime)
    a = kernel.a_T
    phihat = kernel.cf(np.asarray(z, dtype=np.float64) / regime.T)
    return phihat / (1.0 - (a / (1.0 - a)) * (phihat - 1.0))


def sample_geometric_sum(
    kernel: KernelSpec, regime: RegimeSpec, n: int, seed: int
) -> np.ndarray:
    """n i.i.d. draws of X_T = (1/T) sum_{i<=I} X_i, I geometric(1 - a_T).

    Sampling is by inverse CDF of the base density; draw ``j`` is a pure
    function of (seed, j).
    """
    _check_regime_kernel(kernel, regime)
    if n < 1:
        raise ValidationError("need at least one sample")
    key = np.uint64(derive_key(seed, TAG_GEOMSUM))
    shape = kernel.shape
    empty = np.empty(0)
    if isinstance(shape, Exponential):
        return _hot.geom_sums(
            key, n, kernel.a_T, regime.T, 0, shape.beta, 0.0, empty, empty
        )
    if isinstance(shape, PowerLaw):
        return _hot.geom_sums(
            key, n, kernel.a_T, regime.T, 1, shape.alpha, shape.x0, empty, empty
        )
    w, b = kernel.exp_components()
    return _hot.geom_sums(key, n, kernel.a_T, regime.T, 2, 0.0, 0.0, w, b)


def mittag_leffler_cf(alpha: float, C, z):
    """CF 1/(1 - C (iz)^alpha) with the principal branch
    (iz)^alpha = |z|^alpha exp(i sign(z) alpha pi/2).  C may be complex; the
    genuine heavy-tail limit laws carry arg(C) = pi (1 - alpha).
    """
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    z_arr = np.asarray(z, dtype=np.float64)
    iz_alpha = np.abs(z_arr) ** alpha * np.exp(1j * np.sign(z_arr) * alpha * np.pi / 2.0)
    out = 1.0 / (1.0 - C * iz_alpha)
    return out if out.shape else complex(out)


def heavy_tail_sigma(kernel: KernelSpec, z_probe=(1e-3, 1e-4, 1e-5)) -> complex:
    """Numeric constant sigma with phihat(z) - 1 ~ sigma (iz)^alpha as z -> 0+.

    Evaluates the ratio at the probe frequencies and removes the next-order
    z^(1-alpha) term by least squares; the paper states the expansion but not
    the constant, so it is always obtained numerically.
    """
    if not isinstance(kernel.shape, PowerLaw):
        raise ValidationError("heavy-tail constant requires a PowerLaw shape")
    alpha = kernel.shape.alpha
    if alpha >= 1:
        raise ValidationError("heavy-tail constant requires alpha < 1")
    zs = np.asarray(z_probe, dtype=np.float64)
    ratios = np.empty(zs.size, dtype=complex)
    for i, z in enumerate(zs):
        iz_alpha = z**alpha * np.exp(1j * alpha * np.pi / 2.0)
        ratios[i] = (kernel.cf(z) - 1.0) / iz_alpha
    design = np.column_stack([np.ones(zs.size), zs ** (1.0 - alpha)])
    coef, *_ = np.linalg.lstsq(design.astype(complex), ratios, rcond=None)
    return complex(coef[0])


def _check_regime_kernel(kernel: KernelSpec, regime: RegimeSpec) -> None:
    if abs(kernel.a_T - regime.a_T) > 1e-12:
        raise ValidationError(
            f"kernel a_T={kernel.a_T} inconsistent with regime a_T={regime.a_T}"
        )
