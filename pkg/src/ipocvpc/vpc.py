"""Visual predictive checks for time-to-event models.

Three replicate simulators are provided:

``standard``
    Event and censoring times are drawn for every subject without limit.
``ipoc``
    Simulation stops at each subject's observed end of follow-up; the
    replicate is then summarised with an inverse-probability-of-censoring
    weighted Kaplan-Meier estimate.
``marginal``
    Event times are drawn from the covariate-averaged curve obtained by
    averaging many ``ipoc`` estimates, then handled like ``standard``.

``standard-censored`` stops at the end of follow-up like ``ipoc`` but uses
the unweighted estimator. It is biased on purpose and exists to show that
bias.

Randomness is derived per replicate from ``(seed, stage, replicate)`` with
:class:`numpy.random.SeedSequence`, and each replicate draws one censoring
and one event uniform per subject of the full dataset in row order, so
results do not depend on stratification order or worker scheduling.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .coxph import CoxModel, cox_fit
from .estimators import KmCurve, censoring_fit, km_fit, weighted_km_fit
from .records import Study
from .survmodel import StepSurvival

__all__ = [
    "Algorithm",
    "WeightForm",
    "SimRecord",
    "SimReplicate",
    "MarginalCurve",
    "VpcBand",
    "VpcConfig",
    "StratumResult",
    "VpcResult",
    "replicate_rng",
    "simulate_replicate_standard",
    "simulate_replicate_followup",
    "simulate_replicate_ipoc",
    "simulate_replicate_marginal",
    "IpocWeights",
    "ipoc_weights",
    "build_marginal",
    "aggregate_bands",
    "default_grid",
    "at_risk_fraction",
    "run_vpc",
]

# seed-derivation stages
SIMULATION_STAGE = 0
MARGINAL_STAGE = 1


class Algorithm(str, enum.Enum):
    STANDARD = "standard"
    STANDARD_CENSORED = "standard-censored"
    IPOC = "ipoc"
    MARGINAL = "marginal"


class WeightForm(str, enum.Enum):
    FULL = "full"
    SIMPLIFIED = "simplified"


@dataclass(frozen=True)
class SimRecord:
    subject_id: str
    c_sim: float
    t_sim: float
    x: float
    delta: bool


@dataclass(frozen=True)
class SimReplicate:
    """One simulated study in columnar form, rows aligned with the source study."""

    subject_id: tuple
    c_sim: np.ndarray
    t_sim: np.ndarray
    x: np.ndarray
    delta: np.ndarray

    def __len__(self):
        return self.x.size

    def __iter__(self) -> Iterator[SimRecord]:
        for i in range(len(self)):
            yield SimRecord(
                self.subject_id[i],
                float(self.c_sim[i]),
                float(self.t_sim[i]),
                float(self.x[i]),
                bool(self.delta[i]),
            )


def replicate_rng(seed: int, replicate: int, stage: int = SIMULATION_STAGE):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stage, replicate)))


def _uniforms(rng, n):
    u = rng.random((n, 2))
    # Generator.random is on [0, 1); inverse transforms need (0, 1)
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


def _resolve_standard(c, t, horizon):
    """Earlier draw wins, ties go to the event; double-infinite draws censor at horizon."""
    delta = (c >= t) & np.isfinite(t)
    x = np.where(delta, t, np.minimum(c, horizon))
    return x, delta


def _resolve_followup(c, t, x_obs):
    beyond = (c > x_obs) & (t > x_obs)
    delta = ~beyond & (c >= t)
    x = np.where(beyond, x_obs, np.where(delta, t, c))
    return x, delta


def _replicate(study, c, t, x, delta):
    return SimReplicate(study.subject_id, c, t, x, delta)


def _standard_from_uniforms(study, event_model, cens_model, u, horizon):
    c = cens_model.sample(u[:, 0])
    t = event_model.sample(study.covariates, u[:, 1])
    return _replicate(study, c, t, *_resolve_standard(c, t, horizon))


def _followup_from_uniforms(study, event_model, cens_model, u):
    c = cens_model.sample(u[:, 0])
    t = event_model.sample(study.covariates, u[:, 1])
    return _replicate(study, c, t, *_resolve_followup(c, t, study.time))


def _marginal_from_uniforms(study, marginal, cens_model, u, horizon):
    c = cens_model.sample(u[:, 0])
    t = marginal.survival.sample(u[:, 1])
    return _replicate(study, c, t, *_resolve_standard(c, t, horizon))


def simulate_replicate_standard(
    study: Study, event_model: CoxModel, cens_model: StepSurvival, rng, horizon=None
) -> SimReplicate:
    """Draw ``(c, t)`` per subject and keep the earlier; ties resolve to the event.

    An infinite event draw loses to any censoring draw; when both are
    infinite the subject is censored at ``horizon`` (default: last observed
    follow-up time).
    """
    horizon = study.horizon if horizon is None else horizon
    return _standard_from_uniforms(
        study, event_model, cens_model, _uniforms(rng, len(study)), horizon
    )


def simulate_replicate_followup(
    study: Study, event_model: CoxModel, cens_model: StepSurvival, rng
) -> SimReplicate:
    """Draw ``(c, t)`` per subject and stop simulating at the observed follow-up.

    Subjects whose draws both exceed their observed time ``x_obs`` are
    censored at ``x_obs``; otherwise the earlier draw wins and ties go to the
    event. Every resolved time is at most ``x_obs``.
    """
    return _followup_from_uniforms(study, event_model, cens_model, _uniforms(rng, len(study)))


# same replicate, different estimator downstream
simulate_replicate_ipoc = simulate_replicate_followup


def simulate_replicate_marginal(
    study: Study, marginal: MarginalCurve, cens_model: StepSurvival, rng, horizon=None
) -> SimReplicate:
    """Like :func:`simulate_replicate_standard` but with covariate-free event draws."""
    horizon = study.horizon if horizon is None else horizon
    return _marginal_from_uniforms(study, marginal, cens_model, _uniforms(rng, len(study)), horizon)


class IpocWeights:
    """Inverse probability of remaining uncensored in a follow-up-limited replicate.

    ``FULL`` is ``1 / (S(t | y_i) * Sc(t) ** 2)`` and ``SIMPLIFIED`` is
    ``1 / S(t | y_i)``. The ``Sc(t) ** 2`` factor is common to every subject
    at a given time, so both forms give the same weighted Kaplan-Meier
    increments.
    """

    def __init__(self, event_model: CoxModel, cens_model: StepSurvival, covariates, form):
        self.event_model = event_model
        self.cens_model = cens_model
        self.form = WeightForm(form)
        self._risk = event_model.risk_score(np.asarray(covariates, dtype=float))

    def __call__(self, idx, t):
        t = np.asarray(t, dtype=float)
        w = np.exp(self.event_model.baseline_cumhaz(t) * self._risk[idx])
        if self.form is WeightForm.FULL:
            with np.errstate(divide="ignore"):
                w = w / self.cens_model.survival_at(t) ** 2
        return w


def ipoc_weights(event_model, cens_model, study: Study, form=WeightForm.SIMPLIFIED):
    return IpocWeights(event_model, cens_model, study.covariates, form)


@dataclass(frozen=True)
class MarginalCurve:
    """Pointwise mean of weighted replicate curves, as a step curve on ``grid``."""

    grid: np.ndarray
    survival: StepSurvival
    replicates: int

    def survival_at(self, t):
        return self.survival.survival_at(t)

    def sample(self, u):
        return self.survival.sample(u)


@dataclass(frozen=True)
class VpcBand:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    replicate_count: int
    quantiles: tuple = (0.05, 0.95)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def mean_width(self) -> float:
        return float(np.mean(self.width))


def default_grid(horizon: float, size: int = 200) -> np.ndarray:
    if size < 2:
        raise ValueError("grid needs at least two points")
    return np.linspace(0.0, horizon, size)


def at_risk_fraction(study: Study, grid) -> np.ndarray:
    """Fraction of subjects whose observed follow-up reaches each grid time."""
    grid = np.asarray(grid, dtype=float)
    return (study.time[:, None] >= grid[None, :]).mean(axis=0)


def _nearest_rank(sorted_values, q):
    j = sorted_values.shape[0]
    k = max(1, math.ceil(q * j - 1e-12))
    return sorted_values[k - 1]


def _band_from_matrix(values, grid, quantiles):
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        raise ValueError("cannot aggregate an empty set of curves")
    lo_q, hi_q = quantiles
    if not 0 < lo_q < hi_q < 1:
        raise ValueError(f"quantiles must satisfy 0 < lower < upper < 1, got {quantiles}")
    ordered = np.sort(values, axis=0)
    return VpcBand(
        grid=np.asarray(grid, dtype=float),
        mean=values.mean(axis=0),
        lower=_nearest_rank(ordered, lo_q),
        upper=_nearest_rank(ordered, hi_q),
        replicate_count=values.shape[0],
        quantiles=(lo_q, hi_q),
    )


def aggregate_bands(curves: Sequence, grid, quantiles=(0.05, 0.95)) -> VpcBand:
    """Pointwise mean and nearest-rank quantiles of curves evaluated on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    curves = list(curves)
    if not curves:
        raise ValueError("cannot aggregate an empty set of curves")
    values = np.vstack([c.survival_at(grid) for c in curves])
    return _band_from_matrix(values, grid, quantiles)


def _map_ordered(fn, n, workers):
    if workers is None or workers <= 1:
        return [fn(j) for j in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


class ReplicateWeightError(ValueError):
    def __init__(self, replicate, cause):
        self.replicate = replicate
        super().__init__(f"replicate {replicate}: {cause}")


def _subset_uniforms(seed, stage, j, n_total, rows):
    return _uniforms(replicate_rng(seed, j, stage), n_total)[rows]


def _marginal_matrix(study, event_model, cens_model, replicates, grid, seed, rows,
                     n_total, max_weight, workers):
    weights = ipoc_weights(event_model, cens_model, study, WeightForm.SIMPLIFIED)

    def one(j):
        u = _subset_uniforms(seed, MARGINAL_STAGE, j, n_total, rows)
        rep = _followup_from_uniforms(study, event_model, cens_model, u)
        try:
            curve = weighted_km_fit(rep.x, rep.delta, weights, max_weight=max_weight)
        except ValueError as exc:
            raise ReplicateWeightError(j, exc) from exc
        return curve.survival.survival_at(grid)

    return np.vstack(_map_ordered(one, replicates, workers))


def _marginal_from_matrix(values, grid):
    mean = values.mean(axis=0)
    clamped = np.minimum.accumulate(mean)
    assert np.allclose(clamped, mean, rtol=0, atol=1e-12), "averaged curve not monotone"
    return MarginalCurve(grid, StepSurvival(grid, np.clip(clamped, 0.0, 1.0)), values.shape[0])


def build_marginal(
    study: Study,
    event_model: CoxModel,
    cens_model: StepSurvival,
    replicates: int,
    grid,
    seed: int,
    max_weight=None,
    workers=1,
) -> MarginalCurve:
    """Average ``replicates`` IPoC-weighted replicate curves on ``grid``.

    Every replicate is simulated with the follow-up-limited simulator and
    estimated with simplified weights.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    grid = np.asarray(grid, dtype=float)
    rows = np.arange(len(study))
    values = _marginal_matrix(study, event_model, cens_model, replicates, grid, seed, rows,
                              len(study), max_weight, workers)
    return _marginal_from_matrix(values, grid)


@dataclass(frozen=True)
class VpcConfig:
    algorithm: Algorithm = Algorithm.STANDARD
    replicates: int = 500
    seed: int = 0
    grid_size: int = 200
    grid: tuple | None = None
    quantiles: tuple = (0.05, 0.95)
    stratify_by: str | None = None
    covariates: tuple | None = None
    weight_form: WeightForm = WeightForm.SIMPLIFIED
    max_weight: float | None = None
    marginal_replicates: int | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "weight_form", WeightForm(self.weight_form))
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        lo, hi = self.quantiles
        if not 0 < lo < hi < 1:
            raise ValueError(f"quantiles must satisfy 0 < lower < upper < 1, got {self.quantiles}")
        if self.max_weight is not None and not self.max_weight > 0:
            raise ValueError("max_weight must be positive")


@dataclass(frozen=True)
class StratumResult:
    label: str
    band: VpcBand
    observed: KmCurve
    at_risk: np.ndarray
    marginal: MarginalCurve | None = None


@dataclass
class VpcResult:
    config: VpcConfig
    event_model: CoxModel
    cens_model: StepSurvival
    grid: np.ndarray
    strata: dict = field(default_factory=dict)

    def __getitem__(self, label) -> StratumResult:
        return self.strata[label]

    def to_csv(self) -> str:
        """Long-format band table, one row per stratum and grid time."""
        lines = ["stratum,time,mean,lower,upper,observed_km"]
        for label, res in self.strata.items():
            obs = res.observed.survival.survival_at(self.grid)
            for k, t in enumerate(self.grid):
                b = res.band
                row = (t, b.mean[k], b.lower[k], b.upper[k], obs[k])
                lines.append(label + "," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def _stratum_label(value):
    v = float(value)
    return str(int(v)) if v.is_integer() else repr(v)


def _strata(study: Study, stratify_by):
    if stratify_by is None:
        return [("all", np.arange(len(study)))]
    col = study.column(stratify_by)
    return [(_stratum_label(v), np.flatnonzero(col == v)) for v in np.unique(col)]


def fit_models(study: Study, covariates=None):
    """Fit the Cox event model and the reverse-KM censoring model."""
    names = tuple(covariates) if covariates is not None else study.covariate_names
    x = np.column_stack([study.column(n) for n in names]) if names else np.zeros((len(study), 0))
    event_model = cox_fit(study.time, study.event, x, names)
    cens_model = censoring_fit(study.time, study.event)
    return event_model, cens_model


def run_vpc(study: Study, config: VpcConfig = VpcConfig(), event_model=None, cens_model=None
            ) -> VpcResult:
    """Fit models on the full study, then simulate and aggregate per stratum."""
    if event_model is None or cens_model is None:
        fitted_event, fitted_cens = fit_models(study, config.covariates)
        event_model = event_model or fitted_event
        cens_model = cens_model or fitted_cens
    names = event_model.covariate_names
    x_all = np.column_stack([study.column(n) for n in names]) if names else np.zeros(
        (len(study), 0))
    model_study = Study(study.subject_id, study.time, study.event, x_all, names)

    horizon = study.horizon
    grid = (np.asarray(config.grid, dtype=float) if config.grid is not None
            else default_grid(horizon, config.grid_size))
    algo = config.algorithm
    n_total = len(study)
    result = VpcResult(config, event_model, cens_model, grid)

    for label, rows in _strata(study, config.stratify_by):
        sub = model_study.subset(np.isin(np.arange(n_total), rows))
        marginal = None
        if algo is Algorithm.MARGINAL:
            m_reps = config.marginal_replicates or config.replicates
            values = _marginal_matrix(sub, event_model, cens_model, m_reps, grid, config.seed,
                                      rows, n_total, config.max_weight, config.workers)
            marginal = _marginal_from_matrix(values, grid)
        weights = (ipoc_weights(event_model, cens_model, sub, config.weight_form)
                   if algo is Algorithm.IPOC else None)

        def one(j, sub=sub, rows=rows, marginal=marginal, weights=weights):
            u = _subset_uniforms(config.seed, SIMULATION_STAGE, j, n_total, rows)
            if algo is Algorithm.STANDARD:
                rep = _standard_from_uniforms(sub, event_model, cens_model, u, horizon)
            elif algo is Algorithm.MARGINAL:
                rep = _marginal_from_uniforms(sub, marginal, cens_model, u, horizon)
            else:
                rep = _followup_from_uniforms(sub, event_model, cens_model, u)
            if algo is Algorithm.IPOC:
                try:
                    curve = weighted_km_fit(rep.x, rep.delta, weights,
                                            max_weight=config.max_weight)
                except ValueError as exc:
                    raise ReplicateWeightError(j, exc) from exc
            else:
                curve = km_fit(rep.x, rep.delta)
            return curve.survival.survival_at(grid)

        values = np.vstack(_map_ordered(one, config.replicates, config.workers))
        band = _band_from_matrix(values, grid, config.quantiles)
        observed = km_fit(sub.time, sub.event)
        result.strata[label] = StratumResult(label, band, observed,
                                             at_risk_fraction(sub, grid), marginal)
    return result
