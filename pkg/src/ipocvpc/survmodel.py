"""Survival-distribution primitives.

Three families are supported: exponential, Weibull and right-continuous step
functions. Each exposes ``survival_at`` (vectorised over ``t``) and
``sample`` (inverse transform over an array of uniforms). An event that lies
beyond the support of a step curve is reported as :data:`INFINITE`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "INFINITE",
    "ExponentialDist",
    "WeibullDist",
    "StepSurvival",
    "survival_at",
    "sample_event_time",
]

#: Sentinel for "no event within the support of the curve".
INFINITE = math.inf


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise ValueError("survival evaluated at a negative or NaN time")
    return t


def _check_uniforms(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("uniform draws must lie in the open interval (0, 1)")
    return u


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class ExponentialDist:
    """Exponential event times with constant hazard ``rate``."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    def survival_at(self, t):
        t = _check_times(t)
        return _scalar_or_array(np.exp(-self.rate * t), t)

    def sample(self, u):
        u = _check_uniforms(u)
        return _scalar_or_array(-np.log(u) / self.rate, u)


@dataclass(frozen=True)
class WeibullDist:
    """Weibull with ``S(t) = exp(-(t / scale) ** shape)``."""

    scale: float
    shape: float

    def __post_init__(self):
        for name in ("scale", "shape"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def survival_at(self, t):
        t = _check_times(t)
        return _scalar_or_array(np.exp(-((t / self.scale) ** self.shape)), t)

    def sample(self, u):
        u = _check_uniforms(u)
        return _scalar_or_array(self.scale * (-np.log(u)) ** (1.0 / self.shape), u)


@dataclass(frozen=True)
class StepSurvival:
    """Right-continuous, non-increasing step survival curve.

    ``S(t) = 1`` for ``t < knots[0]`` and ``S(t) = values[r]`` for
    ``knots[r] <= t < knots[r + 1]``. The last value is held forever.
    """

    knots: np.ndarray
    values: np.ndarray
    _neg_values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float).reshape(-1)
        if knots.shape != values.shape:
            raise ValueError("knots and values must have equal length")
        if knots.size:
            if knots[0] < 0 or np.any(np.diff(knots) <= 0):
                raise ValueError("knots must be non-negative and strictly increasing")
            if np.any(values < 0) or np.any(values > 1):
                raise ValueError("survival values must lie in [0, 1]")
            if np.any(np.diff(values) > 0):
                raise ValueError("survival values must be non-increasing")
        knots.flags.writeable = False
        values.flags.writeable = False
        neg = -values
        neg.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_neg_values", neg)

    @classmethod
    def constant(cls) -> StepSurvival:
        """The curve that is identically 1."""
        return cls(np.empty(0), np.empty(0))

    @property
    def final_value(self) -> float:
        return float(self.values[-1]) if self.values.size else 1.0

    def survival_at(self, t):
        t = _check_times(t)
        idx = np.searchsorted(self.knots, t, side="right")
        out = np.concatenate(([1.0], self.values))[idx]
        return _scalar_or_array(out, t)

    def sample(self, u):
        """Inverse transform: first knot where the curve drops to ``u`` or below."""
        u = _check_uniforms(u)
        # -values is non-decreasing; first r with values[r] <= u
        idx = np.searchsorted(self._neg_values, -u, side="left")
        padded = np.concatenate((self.knots, [INFINITE]))
        return _scalar_or_array(padded[idx], u)

    def __eq__(self, other):
        if not isinstance(other, StepSurvival):
            return NotImplemented
        return np.array_equal(self.knots, other.knots) and np.array_equal(
            self.values, other.values
        )

    __hash__ = None


def survival_at(dist, t):
    """Evaluate the survival function of ``dist`` at ``t`` (scalar or array)."""
    return dist.survival_at(t)


def sample_event_time(dist, u):
    """Return ``inf{t : S(t) <= u}`` for a uniform draw ``u`` in (0, 1)."""
    return dist.sample(u)
