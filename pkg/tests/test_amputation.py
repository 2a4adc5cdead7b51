import numpy as np
import pytest
import statsmodels.api as sm
from scipy import stats

from sdrmice import amputation, datagen
from sdrmice.amputation import MissingnessSpec


def auc(score, labels):
    """Mann-Whitney estimate of P(score_missing > score_observed)."""
    u = stats.mannwhitneyu(score[labels], score[~labels]).statistic
    return u / (labels.sum() * (~labels).sum())


@pytest.fixture
def full(rng):
    return datagen.generate(datagen.FactorSpec(n_latent=2), rng)


def test_mcar_zero_rate(full, rng):
    out = amputation.ampute_mcar(full, MissingnessSpec("MCAR", 0.0), rng)
    assert not out.mask.any()


def test_mcar_half(full, rng):
    out = amputation.ampute_mcar(full, MissingnessSpec("MCAR", 0.5), rng)
    frac = out.mask[:, :3].mean(axis=0)
    assert np.all(np.abs(frac - 0.5) < 0.05)
    assert not out.mask[:, 3:].any()
    np.testing.assert_array_equal(out.values, full.values)


def test_intercept_closed_forms():
    eta = np.zeros(100)
    assert amputation.calibrate_intercept(eta, 0.5) == pytest.approx(0.0, abs=1e-6)
    assert amputation.calibrate_intercept(eta, 0.25) == pytest.approx(np.log(1 / 3), abs=1e-6)


@pytest.mark.parametrize("pm", [0.1, 0.25, 0.5, 0.9])
def test_intercept_hits_expected_proportion(rng, pm):
    eta = rng.standard_normal(1000)
    eta = (eta - eta.mean()) / eta.std(ddof=1)
    b0 = amputation.calibrate_intercept(eta, pm)
    assert abs(amputation.expected_proportion(b0, eta) - pm) < 1e-6


def test_intercept_bracket_expands():
    eta = np.full(10, 30.0)
    b0 = amputation.calibrate_intercept(eta, 0.5)
    assert b0 == pytest.approx(-30.0, abs=1e-4)


@pytest.mark.parametrize("pm", [0.1, 0.25, 0.5])
def test_mar_fraction(full, rng, pm):
    out = amputation.ampute_mar(full, MissingnessSpec("MAR", pm), rng)
    assert np.all(np.abs(out.mask[:, :3].mean(axis=0) - pm) < 0.03)
    assert not out.mask[:, 3:].any()
    np.testing.assert_array_equal(out.values, full.values)


@pytest.mark.parametrize("j,loc", [(0, "right"), (1, "left"), (2, "tails")])
def test_mar_separation(full, rng, j, loc):
    out = amputation.ampute_mar(full, MissingnessSpec("MAR", 0.5), rng)
    eta = amputation.mar_linear_predictor(full, (3, 4, 5), loc)
    delta = out.mask[:, j]
    assert abs(auc(eta, delta) - 0.74) < 0.05
    fit = sm.Logit(delta.astype(float), sm.add_constant(eta)).fit(disp=0)
    assert abs(fit.prsquared - 0.14) < 0.06


def test_mar_direction(full, rng):
    out = amputation.ampute_mar(full, MissingnessSpec("MAR", 0.5), rng)
    s = full.values[:, 3:6].sum(axis=1)
    right, left, tails = (out.mask[:, k] for k in range(3))
    assert s[right].mean() > s[~right].mean()
    assert np.corrcoef(s, right)[0, 1] > 0
    assert np.corrcoef(s, left)[0, 1] < 0
    assert np.corrcoef(np.abs(s - np.median(s)), tails)[0, 1] > 0


def test_pseudo_r2_on_raw_predictors(full, rng):
    out = amputation.ampute_mar(full, MissingnessSpec("MAR", 0.5), rng)
    X = sm.add_constant(full.values[:, 3:6])
    for j in (0, 1):
        fit = sm.Logit(out.mask[:, j].astype(float), X).fit(disp=0)
        assert abs(fit.prsquared - 0.14) < 0.06


def test_linear_predictor_is_standardized(full):
    for loc in ("right", "left", "tails"):
        eta = amputation.mar_linear_predictor(full, (3, 4, 5), loc)
        assert abs(eta.mean()) < 1e-12 and abs(eta.std(ddof=1) - 1) < 1e-12


def test_mar_requires_observed_predictors(full, rng):
    mask = full.mask.copy()
    mask[0, 4] = True
    with pytest.raises(ValueError):
        amputation.ampute_mar(full.with_mask(mask), MissingnessSpec("MAR", 0.5), rng)


def test_dispatch_and_seed(full):
    spec = MissingnessSpec("MAR", 0.25, seed=3)
    a, b = amputation.ampute(full, spec), amputation.ampute(full, spec)
    np.testing.assert_array_equal(a.mask, b.mask)


@pytest.mark.parametrize("kwargs", [dict(mechanism="MNAR"), dict(pm=1.0), dict(pm=-0.1),
                                    dict(targets=(0, 3)), dict(locations=("right",)),
                                    dict(locations=("up", "left", "tails"))])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        MissingnessSpec(**kwargs)
