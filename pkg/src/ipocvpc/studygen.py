"""Synthetic two-arm, two-risk-group study with exponential events.

The default :class:`StudySpec` has 1000 high-risk and 1000 low-risk subjects,
split evenly between placebo and active, with Weibull(scale=2, shape=5)
censoring and these hazards:

=========  ========  =========
arm        low risk  high risk
=========  ========  =========
active     0.05      2.0
placebo    0.2       2.0
=========  ========  =========

Covariates are coded against the active high-risk cell:
``lowrisk``, ``placebo`` and ``lowrisk_x_placebo``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .records import Study
from .survmodel import ExponentialDist, WeibullDist

__all__ = [
    "GroupSpec",
    "StudySpec",
    "COVARIATES",
    "default_spec",
    "generate_study",
    "true_marginal_survival",
]

COVARIATES = ("lowrisk", "placebo", "lowrisk_x_placebo")
ARMS = ("active", "placebo")


@dataclass(frozen=True)
class GroupSpec:
    """A risk group: its size per arm and its event hazard per arm."""

    label: str
    size_per_arm: dict
    hazard: dict
    lowrisk: bool

    def __post_init__(self):
        for arm in ARMS:
            if arm not in self.size_per_arm or arm not in self.hazard:
                raise ValueError(f"group {self.label!r} missing arm {arm!r}")
            if int(self.size_per_arm[arm]) < 0:
                raise ValueError(f"group {self.label!r}: negative size for {arm!r}")
            if not self.hazard[arm] > 0:
                raise ValueError(f"group {self.label!r}: hazard for {arm!r} must be positive")


@dataclass(frozen=True)
class StudySpec:
    groups: tuple[GroupSpec, ...]
    censoring: WeibullDist = field(default_factory=lambda: WeibullDist(2.0, 5.0))
    seed: int = 20200401

    @property
    def size(self) -> int:
        return sum(int(g.size_per_arm[a]) for g in self.groups for a in ARMS)


def default_spec(seed: int = 20200401) -> StudySpec:
    return StudySpec(
        groups=(
            GroupSpec("high", {"active": 500, "placebo": 500}, {"active": 2.0, "placebo": 2.0}, False),
            GroupSpec("low", {"active": 500, "placebo": 500}, {"active": 0.05, "placebo": 0.2}, True),
        ),
        seed=seed,
    )


def generate_study(spec: StudySpec) -> Study:
    """Draw event and censoring times per subject and keep the earlier one.

    Subjects are laid out group by group, arm by arm (active first), with ids
    ``S0001``, ``S0002``, ... in that order. The event uniform and the
    censoring uniform of each subject come from one seeded generator.
    """
    rng = np.random.default_rng(spec.seed)
    lowrisk, placebo, rates = [], [], []
    for g in spec.groups:
        for arm in ARMS:
            n = int(g.size_per_arm[arm])
            lowrisk += [float(g.lowrisk)] * n
            placebo += [float(arm == "placebo")] * n
            rates += [g.hazard[arm]] * n
    n = len(rates)
    rates = np.asarray(rates, dtype=float)
    u = 1.0 - rng.random((n, 2))  # (0, 1]
    u = np.where(u >= 1.0, np.nextafter(1.0, 0.0), u)
    event_time = -np.log(u[:, 0]) / rates
    cens_time = spec.censoring.sample(u[:, 1]) if n else np.empty(0)
    event = event_time <= cens_time
    time = np.where(event, event_time, cens_time)
    lowrisk = np.asarray(lowrisk)
    placebo = np.asarray(placebo)
    cov = np.column_stack([lowrisk, placebo, lowrisk * placebo]) if n else np.zeros((0, 3))
    width = max(4, len(str(n)))
    ids = [f"S{i + 1:0{width}d}" for i in range(n)]
    return Study(ids, time, event, cov, COVARIATES)


def true_marginal_survival(spec: StudySpec, arm: str, t):
    """Group-size-weighted mixture of exponential survivals within ``arm``."""
    if arm not in ARMS:
        raise ValueError(f"unknown arm {arm!r}; expected one of {ARMS}")
    sizes = np.array([g.size_per_arm[arm] for g in spec.groups], dtype=float)
    if sizes.sum() == 0:
        raise ValueError(f"arm {arm!r} has no subjects")
    w = sizes / sizes.sum()
    t = np.asarray(t, dtype=float)
    out = sum(wg * ExponentialDist(g.hazard[arm]).survival_at(t) for wg, g in zip(w, spec.groups))
    return float(out) if np.ndim(out) == 0 else out
