import numpy as np
import pytest

from sdrmice import datagen
from sdrmice.datagen import FactorSpec
from sdrmice.errors import NotPositiveDefinite


def test_psi_two_factors():
    np.testing.assert_array_equal(datagen.build_psi(FactorSpec(n_latent=2)), [[1, .8], [.8, 1]])


def test_psi_three_factors():
    psi = datagen.build_psi(FactorSpec(n_latent=3))
    assert (psi[0, 1], psi[0, 2], psi[1, 2]) == (0.8, 0.1, 0.1)
    np.testing.assert_array_equal(psi, psi.T)


def test_psi_fifty_factors_positive_definite():
    psi = datagen.build_psi(FactorSpec(n_latent=50))
    assert np.linalg.eigvalsh(psi)[0] > 0
    np.testing.assert_array_equal(np.diag(psi), 1.0)


def test_psi_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        datagen.build_psi(FactorSpec(n_latent=5, corr_other=-0.5))


def test_loading_matrix_simple_structure():
    lam = datagen.loading_matrix(FactorSpec(n_latent=3))
    assert lam.shape == (9, 3)
    assert np.all((lam != 0).sum(axis=1) == 1)
    np.testing.assert_array_equal(lam.argmax(axis=1), np.repeat([0, 1, 2], 3))


def test_implied_correlations():
    sigma = datagen.implied_correlation(FactorSpec(n_latent=10))
    assert sigma[0, 1] == pytest.approx(0.85 ** 2)
    assert sigma[0, 3] == pytest.approx(0.85 ** 2 * 0.8)
    assert sigma[0, 6] == pytest.approx(0.85 ** 2 * 0.1)
    assert round(sigma[0, 1], 2) == 0.72 and round(sigma[0, 3], 2) == 0.58
    assert round(sigma[0, 6], 2) == 0.07


@pytest.mark.parametrize("L", [2, 10, 50])
def test_dimensions_and_labels(L):
    data = datagen.generate(FactorSpec(n_latent=L), np.random.default_rng(L))
    assert data.shape == (1000, 3 * L)
    assert data.columns[0] == "z1" and data.columns[-1] == f"z{3 * L}"
    assert not data.mask.any()


def test_moments_after_rescaling(rng):
    Z = datagen.generate(FactorSpec(n_latent=10), rng).values
    assert np.all(np.abs(Z.mean(axis=0) - 5) < 0.25)
    assert np.all(np.abs(Z.var(axis=0, ddof=1) - 6.5) < 0.7)


def test_empirical_correlation_near_implied(rng):
    spec = FactorSpec(n_latent=10)
    R = np.corrcoef(datagen.generate(spec, rng).values, rowvar=False)
    assert np.abs(R - datagen.implied_correlation(spec)).max() < 0.15


def test_rescaling_keeps_correlations(rng):
    spec = FactorSpec(n_latent=3, target_mean=0.0, target_var=1.0)
    a = datagen.generate(spec, np.random.default_rng(1)).values
    b = datagen.generate(FactorSpec(n_latent=3), np.random.default_rng(1)).values
    np.testing.assert_allclose(np.corrcoef(a, rowvar=False), np.corrcoef(b, rowvar=False),
                               atol=1e-12)
    np.testing.assert_allclose(b, 5 + np.sqrt(6.5) * a, atol=1e-12)


def test_seed_in_spec_is_reproducible():
    spec = FactorSpec(n_latent=2, seed=4)
    np.testing.assert_array_equal(datagen.generate(spec).values, datagen.generate(spec).values)


@pytest.mark.parametrize("kwargs", [dict(loading=1.0), dict(loading=0.0), dict(n_latent=1),
                                    dict(target_var=0.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        FactorSpec(**kwargs)


def test_csv_round_trip(tmp_path, rng):
    data = datagen.generate(FactorSpec(n_rows=20), rng)
    path = tmp_path / "data.csv"
    data.to_csv(path)
    assert path.read_text().splitlines()[0] == "z1,z2,z3,z4,z5,z6"
    back = type(data).from_csv(path)
    np.testing.assert_array_equal(back.values, data.values)
