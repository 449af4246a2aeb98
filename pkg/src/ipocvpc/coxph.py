"""Cox proportional-hazards regression with Breslow ties.

The fitter maximises the Breslow partial likelihood by damped Newton
iterations started at ``beta = 0`` and attaches the Breslow estimate of the
cumulative baseline hazard. The resulting :class:`CoxModel` gives the
conditional survival ``exp(-H0(t) * exp(beta @ y))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .survmodel import INFINITE

__all__ = [
    "ConvergenceOptions",
    "CoxModel",
    "CoxFitError",
    "ConvergenceError",
    "SeparationError",
    "cox_fit",
    "partial_loglik",
    "cond_survival",
    "marginal_survival",
    "breslow_cumhaz",
]


class CoxFitError(ValueError):
    pass


class ConvergenceError(CoxFitError):
    """Newton iterations did not reach the score tolerance."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class SeparationError(CoxFitError):
    """The partial likelihood increases monotonically along some direction."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ConvergenceOptions:
    tol: float = 1e-8
    max_iter: int = 50
    max_halvings: int = 30
    beta_bound: float = 50.0


@dataclass(frozen=True)
class CoxModel:
    """Fitted Cox model.

    ``cumhaz_times``/``cumhaz`` describe the right-continuous Breslow
    cumulative baseline hazard, zero before the first knot and held constant
    after the last one.
    """

    beta: np.ndarray
    cumhaz_times: np.ndarray
    cumhaz: np.ndarray
    covariate_names: tuple[str, ...] = ()
    trace: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).reshape(-1)
        times = np.array(self.cumhaz_times, dtype=float).reshape(-1)
        ch = np.array(self.cumhaz, dtype=float).reshape(-1)
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        if times.shape != ch.shape:
            raise ValueError("cumulative hazard knots and values differ in length")
        if np.any(np.diff(times) <= 0) or np.any(np.diff(ch) < 0) or np.any(ch < 0):
            raise ValueError("baseline cumulative hazard must be a non-decreasing step")
        names = tuple(self.covariate_names) or tuple(f"x{k}" for k in range(beta.size))
        if len(names) != beta.size:
            raise ValueError("covariate_names must align with beta")
        for a in (beta, times, ch):
            a.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "cumhaz_times", times)
        object.__setattr__(self, "cumhaz", ch)
        object.__setattr__(self, "covariate_names", names)

    def __eq__(self, other):
        if not isinstance(other, CoxModel):
            return NotImplemented
        return (
            self.covariate_names == other.covariate_names
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.cumhaz_times, other.cumhaz_times)
            and np.array_equal(self.cumhaz, other.cumhaz)
        )

    __hash__ = None

    def hazard_ratio(self, y1, y0):
        """Hazard of covariate vector ``y1`` relative to ``y0``."""
        diff = np.asarray(y1, dtype=float) - np.asarray(y0, dtype=float)
        return float(np.exp(self.beta @ diff))

    def baseline_cumhaz(self, t):
        idx = np.searchsorted(self.cumhaz_times, np.asarray(t, dtype=float), side="right")
        return np.concatenate(([0.0], self.cumhaz))[idx]

    def risk_score(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.beta.size:
            raise ValueError(
                f"covariate vector has length {y.shape[-1]}, model expects {self.beta.size}"
            )
        return np.exp(y @ self.beta)

    def survival(self, y, t):
        """``S(t | y)``; broadcasts the leading shape of ``y`` against ``t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("survival evaluated at a negative time")
        return np.exp(-self.baseline_cumhaz(t) * self.risk_score(y))

    def sample(self, y, u):
        """Inverse-transform event times for covariate rows ``y`` and uniforms ``u``.

        Draws below the survival reached at the last knot return ``INFINITE``.
        """
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise ValueError("uniform draws must lie in the open interval (0, 1)")
        target = -np.log(u) / self.risk_score(y)
        idx = np.searchsorted(self.cumhaz, target, side="left")
        return np.concatenate((self.cumhaz_times, [INFINITE]))[idx]

    def to_dict(self) -> dict:
        return {
            "covariate_names": list(self.covariate_names),
            "beta": [float(b) for b in self.beta],
            "baseline": {
                "knots": [float(t) for t in self.cumhaz_times],
                "cumhaz": [float(h) for h in self.cumhaz],
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> CoxModel:
        return cls(
            beta=d["beta"],
            cumhaz_times=d["baseline"]["knots"],
            cumhaz=d["baseline"]["cumhaz"],
            covariate_names=tuple(d["covariate_names"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> CoxModel:
        return cls.from_dict(json.loads(text))


class _RiskSets:
    """Distinct event times and row ranges of their risk sets."""

    def __init__(self, time, event, x):
        order = np.argsort(time, kind="stable")
        self.time = time[order]
        self.event = event[order]
        self.x = x[order]
        self.event_times, self.d = np.unique(self.time[self.event], return_counts=True)
        # risk set of event time r is rows start[r]: of the sorted arrays
        self.start = np.searchsorted(self.time, self.event_times, side="left")
        self.x_events = self.x[self.event].sum(axis=0)

    def sums(self, beta, order=2):
        eta = self.x @ beta
        shift = eta.max() if eta.size else 0.0
        r = np.exp(eta - shift)
        s0 = np.cumsum(r[::-1])[::-1][self.start]
        s1 = np.cumsum((r[:, None] * self.x)[::-1], axis=0)[::-1][self.start]
        s2 = None
        if order >= 2:
            outer = r[:, None, None] * self.x[:, :, None] * self.x[:, None, :]
            s2 = np.cumsum(outer[::-1], axis=0)[::-1][self.start]
        return eta, shift, s0, s1, s2


def _loglik_grad_hess(rs: _RiskSets, beta, order=2):
    eta, shift, s0, s1, s2 = rs.sums(beta, order)
    ll = float(eta[rs.event].sum() - np.sum(rs.d * (np.log(s0) + shift)))
    mean = s1 / s0[:, None]
    grad = rs.x_events - (rs.d[:, None] * mean).sum(axis=0)
    hess = None
    if order >= 2:
        cov = s2 / s0[:, None, None] - mean[:, :, None] * mean[:, None, :]
        hess = -(rs.d[:, None, None] * cov).sum(axis=0)
    return ll, grad, hess


def _design(time, event, covariates):
    time = np.asarray(time, dtype=float).reshape(-1)
    event = np.asarray(event, dtype=bool).reshape(-1)
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if x.size == time.size and time.size else x.reshape(time.size, -1)
    if x.shape[0] != time.size or event.size != time.size:
        raise ValueError("time, event and covariates must have one entry per subject")
    return time, event, x


def partial_loglik(time, event, covariates, beta):
    """Breslow log partial likelihood and its gradient at ``beta``."""
    time, event, x = _design(time, event, covariates)
    ll, grad, _ = _loglik_grad_hess(_RiskSets(time, event, x), np.asarray(beta, float), 1)
    return ll, grad


def breslow_cumhaz(time, event, covariates, beta):
    """Breslow cumulative baseline hazard as ``(knots, values)``."""
    time, event, x = _design(time, event, covariates)
    rs = _RiskSets(time, event, x)
    eta = rs.x @ np.asarray(beta, dtype=float)
    s0 = np.cumsum(np.exp(eta)[::-1])[::-1][rs.start]
    return rs.event_times, np.cumsum(rs.d / s0)


def cox_fit(time, event, covariates, covariate_names=(), options=None) -> CoxModel:
    """Fit a Cox model by damped Newton iterations on the partial likelihood.

    Raises
    ------
    CoxFitError
        No events, or a constant/collinear covariate column.
    SeparationError
        A coefficient exceeds ``options.beta_bound`` in magnitude.
    ConvergenceError
        The score did not fall below ``options.tol`` within ``options.max_iter``.
    """
    options = options or ConvergenceOptions()
    time, event, x = _design(time, event, covariates)
    if not event.any():
        raise CoxFitError("no events: the partial likelihood is undefined")
    n, p = x.shape
    if p:
        aug = np.column_stack([np.ones(n), x])
        if np.linalg.matrix_rank(aug) < p + 1:
            raise CoxFitError("covariate matrix is constant or collinear in some column")
    rs = _RiskSets(time, event, x)
    beta = np.zeros(p)
    ll, grad, hess = _loglik_grad_hess(rs, beta)
    trace = [(0, ll, float(np.max(np.abs(grad), initial=0.0)))]
    converged = p == 0 or trace[0][2] < options.tol
    it = 0
    while not converged and it < options.max_iter:
        it += 1
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-hess, grad, rcond=None)[0]
        scale = 1.0
        for _ in range(options.max_halvings):
            candidate = beta + scale * step
            ll_new, grad_new, hess_new = _loglik_grad_hess(rs, candidate)
            if math.isfinite(ll_new) and ll_new >= ll - 1e-12 * abs(ll):
                break
            scale /= 2
        beta, ll, grad, hess = candidate, ll_new, grad_new, hess_new
        score = float(np.max(np.abs(grad)))
        trace.append((it, ll, score))
        if np.max(np.abs(beta)) > options.beta_bound:
            raise SeparationError(
                f"|beta| exceeded {options.beta_bound} at iteration {it}: "
                "monotone likelihood (separation)",
                tuple(trace),
            )
        converged = score < options.tol
    if not converged:
        raise ConvergenceError(
            f"score {trace[-1][2]:.3g} above tolerance after {it} iterations", tuple(trace)
        )
    # the score also vanishes along a diverging direction; catch that via the information
    if p and np.min(np.linalg.eigvalsh(-hess)) < 1e-6 * event.sum():
        raise SeparationError(
            "partial likelihood information is singular at the optimum: "
            "monotone likelihood (separation)",
            tuple(trace),
        )
    knots, cumhaz = breslow_cumhaz(time, event, x, beta)
    return CoxModel(beta, knots, cumhaz, tuple(covariate_names), tuple(trace))


def cond_survival(model: CoxModel, y, t):
    """Survival at ``t`` for a subject with covariate vector ``y``."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != model.beta.size:
        raise ValueError(f"expected a covariate vector of length {model.beta.size}")
    out = model.survival(y, t)
    return float(out) if np.ndim(out) == 0 else out


def marginal_survival(model: CoxModel, covariate_rows, t):
    """Mean conditional survival over ``covariate_rows`` at time(s) ``t``."""
    rows = np.asarray(covariate_rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.shape[0] == 0:
        raise ValueError("marginal survival needs at least one covariate row")
    t = np.asarray(t, dtype=float)
    h0 = model.baseline_cumhaz(t)
    surv = np.exp(-np.multiply.outer(model.risk_score(rows), h0))
    out = surv.mean(axis=0)
    return float(out) if out.ndim == 0 else out
