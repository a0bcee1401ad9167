"""Excitation-kernel family and asymptotic-regime parameters.

The base kernel phi always integrates to one; a path's excitation kernel is
``a_T * phi`` with branching ratio ``a_T < 1``.  Exponential and
sum-of-exponentials shapes have finite mean ``m``; the power-law shape has an
infinite mean and exists only for the heavy-tail operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import quad

from .errors import InfiniteMean, ValidationError

TAIL_MASS = 1e-10  # base-kernel mass allowed beyond the truncation horizon


@dataclass(frozen=True)
class Exponential:
    """phi(t) = beta * exp(-beta * t)."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError("Exponential rate must be positive")


@dataclass(frozen=True)
class PowerLaw:
    """phi(t) = alpha * x0^alpha / (x0 + t)^(1 + alpha), alpha in (0, 1].

    Infinite mean by construction; legal only in heavy-tail operations.
    """

    alpha: float
    x0: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValidationError("PowerLaw exponent must lie in (0, 1]")
        if not self.x0 > 0:
            raise ValidationError("PowerLaw scale must be positive")


@dataclass(frozen=True)
class SumOfExponentials:
    """phi(t) = sum_c w_c * beta_c * exp(-beta_c * t), weights normalized."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), float(b)) for w, b in self.components)
        if not comps:
            raise ValidationError("SumOfExponentials needs at least one component")
        total = sum(w for w, _ in comps)
        if total <= 0:
            raise ValidationError("SumOfExponentials needs positive total weight")
        for w, b in comps:
            if w < 0:
                raise ValidationError("component weights must be nonnegative")
            if not b > 0:
                raise ValidationError("component rates must be positive")
        # User-supplied weights are rescaled so the base kernel integrates to 1.
        comps = tuple((w / total, b) for w, b in comps if w > 0)
        object.__setattr__(self, "components", comps)


Shape = Union[Exponential, PowerLaw, SumOfExponentials]


def _shape_components(shape: Shape):
    """(weights, rates) for exponential-family shapes, None for power law."""
    if isinstance(shape, Exponential):
        return np.array([1.0]), np.array([shape.beta])
    if isinstance(shape, SumOfExponentials):
        w = np.array([c[0] for c in shape.components])
        b = np.array([c[1] for c in shape.components])
        return w, b
    return None


def _default_truncation(shape: Shape) -> float:
    """Smallest horizon with base-kernel tail mass below TAIL_MASS."""
    if isinstance(shape, Exponential):
        return -math.log(TAIL_MASS) / shape.beta
    if isinstance(shape, PowerLaw):
        return shape.x0 * (TAIL_MASS ** (-1.0 / shape.alpha) - 1.0)
    w, b = _shape_components(shape)
    # Bisection on the closed-form tail sum_c w_c exp(-b_c H).
    hi = float(np.max(-np.log(TAIL_MASS / w.size) / b)) + 1.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(w * np.exp(-b * mid)) > TAIL_MASS:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class KernelSpec:
    """A base shape together with its branching ratio and truncation policy.

    Immutable after construction; safe to share across concurrent workers.
    """

    shape: Shape
    a_T: float
    truncation_horizon: float = None

    def __post_init__(self):
        # a_T = 0 (plain Poisson) is admitted as the degenerate boundary used
        # by the no-self-excitation checks; a_T = 1 stays excluded.
        if not 0 <= self.a_T < 1:
            raise ValidationError(f"a_T must lie in [0, 1), got {self.a_T}")
        if self.truncation_horizon is None:
            object.__setattr__(
                self, "truncation_horizon", _default_truncation(self.shape)
            )
        elif self.truncation_horizon < 0:
            raise ValidationError("truncation horizon must be nonnegative")

    # -- base kernel (L1 norm 1) ------------------------------------------

    def base_density(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = self.shape
        if isinstance(s, Exponential):
            out = s.beta * np.exp(-s.beta * t)
        elif isinstance(s, PowerLaw):
            out = s.alpha * s.x0**s.alpha / (s.x0 + t) ** (1.0 + s.alpha)
        else:
            w, b = _shape_components(s)
            out = np.einsum("c,ct->t", w * b, np.exp(-np.multiply.outer(b, t)))
        return out if out.shape else float(out)

    def base_integrated(self, t):
        """Integral of the base kernel over [0, t] (no truncation applied)."""
        t = np.asarray(t, dtype=np.float64)
        s = self.shape
        if isinstance(s, Exponential):
            out = 1.0 - np.exp(-s.beta * t)
        elif isinstance(s, PowerLaw):
            out = 1.0 - (s.x0 / (s.x0 + t)) ** s.alpha
        else:
            w, b = _shape_components(s)
            out = np.einsum("c,ct->t", w, 1.0 - np.exp(-np.multiply.outer(b, t)))
        return out if out.shape else float(out)

    def tail_mass(self, t) -> float:
        return 1.0 - self.base_integrated(t)

    # -- derived quantities ------------------------------------------------

    @property
    def mean(self) -> float:
        """First moment m of the base kernel; InfiniteMean for power laws."""
        s = self.shape
        if isinstance(s, Exponential):
            return 1.0 / s.beta
        if isinstance(s, PowerLaw):
            raise InfiniteMean(
                f"PowerLaw(alpha={s.alpha}) has no finite mean; "
                "use the heavy-tail operations"
            )
        w, b = _shape_components(s)
        return float(np.sum(w / b))

    @property
    def time_scale(self) -> float:
        """Characteristic kernel time scale (m, or x0 for power laws)."""
        if isinstance(self.shape, PowerLaw):
            return self.shape.x0
        return self.mean

    def exp_components(self):
        """(weights, rates) arrays, or None when the shape is a power law."""
        return _shape_components(self.shape)

    def cf(self, z):
        """Characteristic function of the BASE kernel at real frequency z."""
        z_arr = np.asarray(z, dtype=np.float64)
        s = self.shape
        if isinstance(s, PowerLaw):
            flat = [_powerlaw_cf(s, float(zz)) for zz in np.atleast_1d(z_arr)]
            out = np.array(flat).reshape(z_arr.shape)
        else:
            w, b = _shape_components(s)
            out = np.sum(
                w[:, None] * (b[:, None] / (b[:, None] - 1j * z_arr.reshape(1, -1))),
                axis=0,
            ).reshape(z_arr.shape)
        return out if out.shape else complex(out)


def _powerlaw_cf(s: PowerLaw, z: float) -> complex:
    """CF of the Pareto-type base kernel by rotated-contour quadrature.

    For z > 0,  phihat(z) - 1 = -x0^a z^a * I(z)  with
    I(z) = int_0^inf exp(-v) (i v + z x0)^(-a) dv, obtained from
    phihat(z) - 1 = i z int exp(izt) tail(t) dt by rotating the contour to
    the positive imaginary axis.  The integrand is smooth and nonoscillatory,
    so adaptive quadrature is accurate down to z ~ 1e-8.
    """
    if z == 0.0:
        return 1.0 + 0.0j
    if z < 0:
        return np.conj(_powerlaw_cf(s, -z))
    a, x0 = s.alpha, s.x0
    eps = z * x0

    def f_re(v):
        return math.exp(-v) * ((1j * v + eps) ** (-a)).real

    def f_im(v):
        return math.exp(-v) * ((1j * v + eps) ** (-a)).imag

    re = 0.0
    im = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, 30.0)):
        re += quad(f_re, lo, hi, limit=200)[0]
        im += quad(f_im, lo, hi, limit=200)[0]
    return 1.0 - x0**a * z**a * complex(re, im)


# -- spec-level operation wrappers ----------------------------------------


def eval_kernel(spec: KernelSpec, t):
    """a_T * phi(t), zero beyond the truncation horizon; rejects t < 0."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValidationError("kernel evaluated at negative time")
    out = spec.a_T * spec.base_density(t_arr)
    out = np.where(t_arr > spec.truncation_horizon, 0.0, out)
    return out if out.shape else float(out)


def kernel_mean(spec: KernelSpec) -> float:
    return spec.mean


def kernel_cf(spec: KernelSpec, z):
    return spec.cf(z)


@dataclass(frozen=True)
class RegimeSpec:
    """Observation horizon and near-instability balance.

    ``a_T = 1 - lam / T**tail_exponent``.  The critical regime of the CIR
    limit has ``tail_exponent = 1`` (so ``T * (1 - a_T) = lam`` exactly); the
    heavy-tail regime pairs exponent ``alpha < 1`` with a power-law kernel so
    that ``(1 - a_T) * T**alpha = lam``.
    """

    T: float
    lam: float
    mu: float
    tail_exponent: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError("T must be positive")
        if not self.lam > 0:
            raise ValidationError("lambda must be positive")
        if not self.mu > 0:
            raise ValidationError("mu must be positive")
        if not 0 < self.tail_exponent <= 1:
            raise ValidationError("tail exponent must lie in (0, 1]")
        if not self.T**self.tail_exponent > self.lam:
            raise ValidationError(
                f"need T**{self.tail_exponent} > lambda for a_T in (0,1); "
                f"got T={self.T}, lambda={self.lam}"
            )

    @property
    def a_T(self) -> float:
        return 1.0 - self.lam / self.T**self.tail_exponent

    @property
    def u_T(self) -> float:
        return self.T * (1.0 - self.a_T) / self.lam

    def kernel(self, shape: Shape, truncation_horizon: float = None) -> KernelSpec:
        return KernelSpec(shape, self.a_T, truncation_horizon)

    def d0(self, kernel: KernelSpec) -> float:
        """Limit mean m / lambda of the rescaled geometric sum."""
        return kernel.mean / self.lam
