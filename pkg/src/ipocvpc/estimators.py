"""Kaplan-Meier estimators: standard, weighted, and reverse (censoring).

All estimators pool tied events before forming the increment, and a subject
censored at an event time is still counted in that time's risk set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .survmodel import StepSurvival

__all__ = [
    "KmCurve",
    "WeightError",
    "km_fit",
    "weighted_km_fit",
    "censoring_fit",
    "unit_weights",
]

#: ``w(subject_index, time) -> weight``; must broadcast over array arguments.
WeightFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class WeightError(ValueError):
    """A weight was non-finite or non-positive for a risk-set member."""

    def __init__(self, subject, time, value):
        self.subject = subject
        self.time = time
        self.value = value
        super().__init__(f"invalid weight {value!r} for subject {subject} at time {time!r}")


@dataclass(frozen=True)
class KmCurve:
    """Product-limit estimate with its per-event-time bookkeeping.

    ``at_risk`` and ``events`` are counts for the standard estimator and
    weight sums for the weighted one.
    """

    event_times: np.ndarray
    increments: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    survival: StepSurvival

    def __call__(self, t):
        return self.survival.survival_at(t)


def _as_arrays(time, event):
    time = np.asarray(time, dtype=float).reshape(-1)
    event = np.asarray(event, dtype=bool).reshape(-1)
    if time.size == 0:
        raise ValueError("cannot fit a survival curve to zero subjects")
    if event.size != time.size:
        raise ValueError("time and event must have equal length")
    if np.any(np.isnan(time)) or np.any(time < 0):
        raise ValueError("follow-up times must be non-negative")
    return time, event


def _assemble(event_times, increments, at_risk, events):
    # increments are formed as (Y - d) / Y, equal to 1 - d / Y but correctly rounded
    increments = np.clip(increments, 0.0, 1.0)
    survival = StepSurvival(event_times, np.cumprod(increments))
    return KmCurve(event_times, increments, at_risk, events, survival)


def km_fit(time, event) -> KmCurve:
    """Standard Kaplan-Meier estimate.

    Parameters
    ----------
    time : array_like
        End of follow-up per subject.
    event : array_like of bool
        True where follow-up ended with an event.
    """
    time, event = _as_arrays(time, event)
    sorted_time = np.sort(time)
    event_times, d = np.unique(time[event], return_counts=True)
    y = time.size - np.searchsorted(sorted_time, event_times, side="left")
    d = d.astype(float)
    y = y.astype(float)
    return _assemble(event_times, (y - d) / y, y, d)


def weighted_km_fit(time, event, weights: WeightFn, max_weight=None) -> KmCurve:
    """Kaplan-Meier estimate with time-dependent subject weights.

    At each distinct event time ``t`` the increment is
    ``1 - sum(w_i(t), events at t) / sum(w_k(t), k at risk at t)``.

    ``weights`` is called once as ``weights(idx[:, None], t[None, :])`` and
    must broadcast. Weights are validated on risk-set pairs only; pass
    ``max_weight`` to cap them instead of failing on overflow.
    """
    time, event = _as_arrays(time, event)
    event_times = np.unique(time[event])
    if event_times.size == 0:
        empty = np.empty(0)
        return _assemble(empty, empty, empty, empty)
    # only subjects still at risk at the first event time can contribute
    idx = np.flatnonzero(time >= event_times[0])
    t_sub = time[idx]
    at_risk = t_sub[:, None] >= event_times[None, :]
    with np.errstate(all="ignore"):
        w = np.asarray(weights(idx[:, None], event_times[None, :]), dtype=float)
    w = np.broadcast_to(w, at_risk.shape)
    if max_weight is not None:
        w = np.where(np.isnan(w), w, np.minimum(w, max_weight))
    bad = at_risk & ~(np.isfinite(w) & (w > 0))
    if bad.any():
        i, r = np.argwhere(bad)[0]
        raise WeightError(int(idx[i]), float(event_times[r]), float(w[i, r]))
    w = np.where(at_risk, w, 0.0)
    hit = event[idx][:, None] & (t_sub[:, None] == event_times[None, :])
    num = np.where(hit, w, 0.0).sum(axis=0)
    den = w.sum(axis=0)
    return _assemble(event_times, (den - num) / den, den, num)


def unit_weights(idx, t):
    return np.ones(np.broadcast_shapes(np.shape(idx), np.shape(t)))


def censoring_fit(time, event) -> StepSurvival:
    """Reverse Kaplan-Meier estimate of the censoring-time survival."""
    time, event = _as_arrays(time, event)
    return km_fit(time, ~event).survival
