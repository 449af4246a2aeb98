import math

import numpy as np
import pytest

from ipocvpc.coxph import CoxModel
from ipocvpc.estimators import WeightError, km_fit, weighted_km_fit
from ipocvpc.records import Study
from ipocvpc.survmodel import INFINITE, StepSurvival
from ipocvpc.vpc import (
    MarginalCurve,
    VpcConfig,
    WeightForm,
    _resolve_followup,
    _resolve_standard,
    aggregate_bands,
    at_risk_fraction,
    build_marginal,
    ipoc_weights,
    replicate_rng,
    run_vpc,
    simulate_replicate_ipoc,
    simulate_replicate_marginal,
    simulate_replicate_standard,
)


def _resolve1(fn, c, t, bound):
    x, d = fn(np.array([c]), np.array([t]), np.array([bound]))
    return float(x[0]), int(d[0])


@pytest.mark.parametrize("c, t, expected", [
    (0.4, 0.9, (0.4, 0)),
    (0.7, 0.7, (0.7, 1)),
    (0.9, 0.2, (0.2, 1)),
    (0.4, INFINITE, (0.4, 0)),
    (INFINITE, 0.3, (0.3, 1)),
    (INFINITE, INFINITE, (5.0, 0)),
    (7.0, INFINITE, (5.0, 0)),
])
def test_standard_truth_table(c, t, expected):
    assert _resolve1(_resolve_standard, c, t, 5.0) == expected


@pytest.mark.parametrize("c, t, expected", [
    (0.8, 0.9, (0.5, 0)),
    (0.3, 0.9, (0.3, 0)),
    (0.6, 0.4, (0.4, 1)),
    (0.3, 0.3, (0.3, 1)),
    (0.5, 0.9, (0.5, 0)),
    (INFINITE, INFINITE, (0.5, 0)),
    (0.2, INFINITE, (0.2, 0)),
])
def test_followup_truth_table(c, t, expected):
    assert _resolve1(_resolve_followup, c, t, 0.5) == expected


def test_followup_never_exceeds_observed(study, models):
    event_model, cens_model = models
    for j in range(5):
        rep = simulate_replicate_ipoc(study, event_model, cens_model, replicate_rng(3, j))
        assert np.all(rep.x <= study.time)
        ev = rep.delta
        np.testing.assert_array_equal(rep.x[ev], rep.t_sim[ev])


def test_censoring_never_fires():
    study = Study(["a", "b", "c"], [1.0, 2.0, 3.0], [True, True, True], [[0.0], [1.0], [0.0]])
    event_model = CoxModel([0.0], [0.5, 1.0], [5.0, 50.0])  # S reaches ~e^-50
    flat = StepSurvival.constant()
    rep = simulate_replicate_standard(study, event_model, flat, np.random.default_rng(0))
    assert rep.delta.all()
    assert np.all(np.isinf(rep.c_sim))


def test_marginal_all_censored_when_flat():
    study = Study(["a", "b"], [1.0, 2.0], [True, False])
    marginal = MarginalCurve(np.array([0.0, 2.0]), StepSurvival([0.0, 2.0], [1.0, 1.0]), 1)
    cens = StepSurvival([1.5], [0.0])
    rep = simulate_replicate_marginal(study, marginal, cens, np.random.default_rng(0))
    assert not rep.delta.any()
    np.testing.assert_array_equal(rep.x, [1.5, 1.5])


def test_sim_records_iterate(study, models):
    event_model, cens_model = models
    rep = simulate_replicate_standard(study, event_model, cens_model, replicate_rng(0, 0))
    first = next(iter(rep))
    assert first.subject_id == study.subject_id[0]
    assert first.x == min(first.c_sim, first.t_sim)


def test_weight_values():
    model = CoxModel([0.0], [1.0], [math.log(2)])  # S(t>=1) = 0.5
    cens = StepSurvival([1.0], [0.8])
    study = Study(["a"], [2.0], [False], [[0.0]])
    idx, t = np.array([0]), np.array([0.5])
    for form in WeightForm:
        assert ipoc_weights(model, cens, study, form)(idx, t)[0] == 1.0
    t = np.array([1.5])
    assert ipoc_weights(model, cens, study, "full")(idx, t)[0] == pytest.approx(3.125, abs=1e-12)
    assert ipoc_weights(model, cens, study, "simplified")(idx, t)[0] == pytest.approx(2.0, abs=1e-12)


def test_zero_censoring_survival_is_weight_error():
    model = CoxModel([0.0], [1.0], [0.1])
    cens = StepSurvival([0.5], [0.0])
    study = Study(["a", "b"], [1.0, 2.0], [True, True], [[0.0], [0.0]])
    w = ipoc_weights(model, cens, study, "full")
    with pytest.raises(WeightError):
        weighted_km_fit([1.0, 2.0], [True, True], w)
    capped = weighted_km_fit([1.0, 2.0], [True, True], w, max_weight=10.0)
    assert capped.increments[0] == 0.5


def test_weight_forms_agree(study, models):
    event_model, cens_model = models
    full = ipoc_weights(event_model, cens_model, study, WeightForm.FULL)
    simple = ipoc_weights(event_model, cens_model, study, WeightForm.SIMPLIFIED)
    for j in range(5):
        rep = simulate_replicate_ipoc(study, event_model, cens_model, replicate_rng(9, j))
        a = weighted_km_fit(rep.x, rep.delta, full)
        b = weighted_km_fit(rep.x, rep.delta, simple)
        np.testing.assert_allclose(a.increments, b.increments, rtol=0, atol=1e-12)


def test_aggregate_examples():
    grid = np.array([0.0, 1.0, 2.0])
    c = StepSurvival([1.0], [0.4])
    band = aggregate_bands([c], grid)
    np.testing.assert_array_equal(band.lower, band.mean)
    np.testing.assert_array_equal(band.upper, band.mean)
    curves = [StepSurvival([1.0], [v]) for v in (0.8, 0.2, 0.5)]
    band = aggregate_bands(curves, grid, (0.05, 0.95))
    assert (band.lower[1], band.mean[1], band.upper[1]) == (0.2, pytest.approx(0.5), 0.8)
    with pytest.raises(ValueError):
        aggregate_bands([], grid)
    with pytest.raises(ValueError):
        aggregate_bands(curves, grid[::-1])


def test_nearest_rank_definition():
    values = np.arange(1, 21, dtype=float) / 20
    curves = [StepSurvival([1.0], [v]) for v in values]
    band = aggregate_bands(curves, [1.0], (0.05, 0.95))
    # ceil(0.05*20)=1st and ceil(0.95*20)=19th order statistics
    assert band.lower[0] == values[0] and band.upper[0] == values[18]


def test_build_marginal_single_replicate(study, models):
    event_model, cens_model = models
    sub = study.subset(study.column("placebo") == 0)
    grid = np.linspace(0, sub.horizon, 50)
    m = build_marginal(sub, event_model, cens_model, 1, grid, seed=4)
    from ipocvpc.vpc import MARGINAL_STAGE, _uniforms, _followup_from_uniforms
    u = _uniforms(replicate_rng(4, 0, MARGINAL_STAGE), len(sub))
    rep = _followup_from_uniforms(sub, event_model, cens_model, u)
    w = ipoc_weights(event_model, cens_model, sub)
    expected = weighted_km_fit(rep.x, rep.delta, w).survival.survival_at(grid)
    np.testing.assert_array_equal(m.survival_at(grid), expected)
    assert m.survival_at(0.0) == 1.0


def test_marginal_mean_of_constants():
    from ipocvpc.vpc import _marginal_from_matrix
    grid = np.array([0.0, 1.0, 2.0])
    m = _marginal_from_matrix(np.array([[0.8] * 3, [0.6] * 3]), grid)
    np.testing.assert_allclose(m.survival_at(grid), 0.7)


def test_build_marginal_rejects_zero(study, models):
    with pytest.raises(ValueError):
        build_marginal(study, *models, 0, [0.0, 1.0], seed=0)


def test_replicates_one_degenerate(study):
    res = run_vpc(study, VpcConfig(replicates=1, seed=2, grid_size=30))
    b = res["all"].band
    np.testing.assert_array_equal(b.lower, b.upper)
    np.testing.assert_array_equal(b.mean, b.upper)


def test_stratified_matches_subset_partition(study, models):
    cfg = VpcConfig(replicates=20, seed=3, grid_size=40, stratify_by="placebo", algorithm="ipoc")
    res = run_vpc(study, cfg)
    assert set(res.strata) == {"0", "1"}
    for label, sr in res.strata.items():
        v = sr.band
        assert np.all(v.lower <= v.mean + 1e-15) and np.all(v.mean <= v.upper + 1e-15)
        assert np.all((v.lower >= 0) & (v.upper <= 1))
        sel = study.column("placebo") == float(label)
        np.testing.assert_array_equal(sr.observed.survival.values,
                                      km_fit(study.time[sel], study.event[sel]).survival.values)
        np.testing.assert_array_equal(sr.at_risk, at_risk_fraction(study.subset(sel), res.grid))


def test_same_replicates_across_followup_algorithms(study):
    # standard-censored and ipoc see identical simulated studies; only the estimator differs
    base = dict(replicates=3, seed=8, grid_size=20)
    a = run_vpc(study, VpcConfig(algorithm="standard-censored", **base))
    b = run_vpc(study, VpcConfig(algorithm="ipoc", **base))
    assert not np.array_equal(a["all"].band.mean, b["all"].band.mean)


def test_determinism_across_workers(study):
    base = dict(replicates=16, seed=21, grid_size=50, stratify_by="placebo")
    for algo in ("standard", "ipoc", "marginal"):
        one = run_vpc(study, VpcConfig(algorithm=algo, workers=1, **base)).to_csv()
        many = run_vpc(study, VpcConfig(algorithm=algo, workers=4, **base)).to_csv()
        assert one == many


def test_csv_layout(study):
    res = run_vpc(study, VpcConfig(replicates=2, seed=0, grid_size=5, stratify_by="placebo"))
    lines = res.to_csv().splitlines()
    assert lines[0] == "stratum,time,mean,lower,upper,observed_km"
    assert len(lines) == 1 + 2 * 5
    assert lines[1].startswith("0,0.0,1.0,1.0,1.0,1.0")


def test_config_validation():
    with pytest.raises(ValueError):
        VpcConfig(replicates=0)
    with pytest.raises(ValueError):
        VpcConfig(quantiles=(0.9, 0.1))
    with pytest.raises(ValueError):
        VpcConfig(algorithm="bogus")
    with pytest.raises(ValueError):
        VpcConfig(max_weight=-1)
