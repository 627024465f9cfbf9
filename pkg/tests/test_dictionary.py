import numpy as np
import pytest

from epimix.dictionary import (
    Weights,
    build_gaussian_dictionary,
    build_sir_dictionary,
    dict_components,
    dict_fit,
    dict_predict,
    dictionary_frame,
    read_dictionary_csv,
    solve_nnls_ridge,
    stem_frame,
    weights_frame,
)
from epimix.errors import ParameterError
from epimix.tools.report_writer import ReportWriter


@pytest.fixture(scope="module")
def gaussian():
    return build_gaussian_dictionary()


def test_default_grid_sizes(gaussian):
    sir = build_sir_dictionary()
    assert gaussian.size == 27 * 15 == 405
    assert sir.size == 546
    for d in (gaussian, sir):
        assert d.weeks == 52
        assert np.allclose(d.atoms.max(axis=1), 1.0, atol=1e-12, rtol=0)
        assert np.all(d.atoms >= 0)


def test_gaussian_atom_shape():
    d = build_gaussian_dictionary(means=[10.0], sigmas=[2.0], weeks=20)
    assert d.size == 1
    assert d.atoms[0, 10] == 1.0
    assert d.atoms[0, 12] == pytest.approx(np.exp(-0.5))
    assert d.meta[0].describe() == {"mu": 10.0, "sigma": 2.0}


def test_sir_atoms_respect_shift():
    d = build_sir_dictionary(s0_grid=[1e4], beta_grid=[0.7], k_grid=[0, 10], weeks=30)
    assert d.size == 2
    assert np.all(d.atoms[1, :10] == 0.0)
    assert d.meta[1].describe() == {"s0": 1e4, "beta": 0.7, "k": 10}


@pytest.mark.parametrize("kwargs", [
    dict(sigmas=[0.0, 1.0]),
    dict(means=[]),
])
def test_invalid_gaussian_grid(kwargs):
    with pytest.raises(ParameterError):
        build_gaussian_dictionary(**kwargs)


def test_sir_horizon_must_cover_shifts():
    with pytest.raises(ParameterError):
        build_sir_dictionary(k_grid=[0, 40], weeks=30)


def test_reconstructs_a_scaled_atom(gaussian):
    x = 500.0 * gaussian.atoms[100]
    weights = solve_nnls_ridge(gaussian, x, lam=1e-6)
    assert np.all(weights.theta >= 0)
    assert np.allclose(dict_predict(gaussian, weights, np.arange(53)), x, rtol=1e-4, atol=1e-3)


def test_zero_series_gives_zero_weights(gaussian):
    weights = solve_nnls_ridge(gaussian, np.zeros(53), lam=1.0)
    assert np.all(weights.theta == 0.0)
    assert weights.support_size == 0
    assert weights_frame(gaussian, weights).empty


def test_ridge_shrinks_weights(gaussian, positive_series):
    small = dict_fit(gaussian, positive_series, lam=0.1)
    large = dict_fit(gaussian, positive_series, lam=1e6)
    assert np.linalg.norm(large.theta) < np.linalg.norm(small.theta)


def test_prefix_fit_and_extrapolation(gaussian, positive_series):
    head = positive_series.head(30)
    weights = dict_fit(gaussian, head, lam=1.0)
    ahead = dict_predict(gaussian, weights, np.arange(31, 35))
    assert ahead.shape == (4,)
    assert np.all(ahead >= 0)
    with pytest.raises(ParameterError):
        dict_predict(gaussian, weights, np.arange(50, 54))


def test_components_sum_to_prediction(gaussian, synthetic):
    weights = dict_fit(gaussian, synthetic.observed, lam=1.0)
    weeks = np.arange(53)
    parts = dict_components(gaussian, weights, weeks)
    assert len(parts) == weights.support_size > 0
    total = np.sum([curve for _, _, _, curve in parts], axis=0)
    full = dict_predict(gaussian, weights, weeks)
    assert np.allclose(total, full, rtol=1e-3, atol=1e-3 * full.max())


def test_weights_table_lists_support(gaussian, synthetic):
    weights = dict_fit(gaussian, synthetic.observed, lam=1.0)
    table = weights_frame(gaussian, weights)
    assert list(table.columns) == ["atom_index", "family", "params", "theta"]
    assert len(table) == weights.support_size
    assert (table["theta"] > 0).all()
    assert set(table["family"]) == {"gaussian"}


def test_dictionary_csv_exchange(tmp_path):
    d = build_sir_dictionary(s0_grid=[1e4, 1e5], beta_grid=[0.5], k_grid=[0, 4], weeks=12)
    path = ReportWriter(tmp_path).write_csv("dict.csv", dictionary_frame(d))
    back = read_dictionary_csv(path)
    assert np.array_equal(back.atoms, d.atoms)
    assert back.meta == d.meta


def test_default_grid_atom_values(gaussian):
    index = next(j for j, m in enumerate(gaussian.meta) if m.params == (26.0, 5.0))
    assert gaussian.atoms[index, 26] == 1.0
    assert gaussian.atoms[index, 31] == pytest.approx(0.60653, abs=1e-5)
    assert gaussian.atoms[index, 31] == pytest.approx(np.exp(-0.5), rel=1e-12)


def test_prediction_is_weighted_sum_of_atoms():
    d = build_gaussian_dictionary(means=[10.0, 20.0, 30.0, 40.0], sigmas=[3.0], weeks=52)
    weights = Weights(theta=np.array([2.0, 0.0, 4.0, 0.0]), lam=0.0)
    weeks = np.arange(53)
    assert np.allclose(dict_predict(d, weights, weeks), 2.0 * d.atoms[0] + 4.0 * d.atoms[2], rtol=1e-12, atol=0)


def test_negated_atom_gives_zero_weights(gaussian):
    weights = solve_nnls_ridge(gaussian, -gaussian.atoms[0], lam=1.0)
    assert np.all(weights.theta == 0.0)
    assert weights.support_size == 0


def test_stems_name_atom_parameters():
    d = build_sir_dictionary(s0_grid=[1e4, 1e5], beta_grid=[0.7], k_grid=[0, 4], weeks=12)
    weights = Weights(theta=np.array([0.0, 3.0, 0.0, 1.5]), lam=1.0)
    stems = stem_frame(weights_frame(d, weights))
    assert list(stems.columns) == ["atom_index", "family", "s0", "beta", "k", "theta"]
    assert stems[["s0", "beta", "k", "theta"]].values.tolist() == [[1e4, 0.7, 4.0, 3.0], [1e5, 0.7, 4.0, 1.5]]
