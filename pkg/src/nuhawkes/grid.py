"""Uniformly sampled functions on [0, H]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class GridFunction:
    """A function sampled on the uniform grid {0, step, 2*step, ...}.

    ``values[k]`` is the sample at ``k * step``.  Values are immutable after
    construction; the instance is safe to share across workers.
    """

    step: float
    values: np.ndarray
    start: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.step <= 0:
            raise ValidationError("grid step must be positive")
        if vals.ndim != 1 or vals.size < 2:
            raise ValidationError("grid needs at least two samples")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("grid values must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)

    @property
    def horizon(self) -> float:
        return self.start + self.step * (self.values.size - 1)

    def __call__(self, t):
        """Linear interpolation inside the grid; constant extrapolation."""
        return np.interp(t, self.times, self.values)

    def integral(self) -> float:
        """Trapezoidal integral over the full grid."""
        return float(np.trapezoid(self.values, dx=self.step))

    def cumulative(self) -> "GridFunction":
        """Running trapezoidal integral, sampled on the same grid."""
        vals = self.values
        cum = np.empty_like(vals)
        cum[0] = 0.0
        np.cumsum(0.5 * self.step * (vals[1:] + vals[:-1]), out=cum[1:])
        return GridFunction(step=self.step, values=cum, start=self.start)


def n_steps(horizon: float, step: float) -> int:
    """Number of steps for a grid on [0, horizon]; step must divide horizon."""
    n = int(round(horizon / step))
    if n < 1 or abs(n * step - horizon) > 1e-9 * max(1.0, horizon):
        raise ValidationError(
            f"step {step} does not divide horizon {horizon}"
        )
    return n
