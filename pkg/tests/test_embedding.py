import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contscale.embedding import (
    EmbeddingParams,
    ScalarSeries,
    delay_embed,
    delayed_mutual_information,
    false_nearest_fraction,
    quantile_codes,
    select_dimension_fnn,
    select_lag_mutual_information,
)
from contscale.errors import InputSizeError
from contscale.generators import generate_logistic_network, logistic_pair_spec

import oracle


def test_delay_embed_unrolled():
    emb = delay_embed(ScalarSeries([1, 2, 3, 4, 5]), EmbeddingParams(2, 1))
    np.testing.assert_array_equal(emb.points, [[1, 2], [2, 3], [3, 4], [4, 5]])


def test_delay_embed_identity():
    emb = delay_embed(ScalarSeries([1, 2, 3, 4, 5]), EmbeddingParams(1, 1))
    assert len(emb) == 5
    np.testing.assert_array_equal(emb.points[:, 0], [1, 2, 3, 4, 5])


def test_delay_embed_lag_two():
    emb = delay_embed(ScalarSeries([1, 2, 3, 4, 5, 6]), EmbeddingParams(3, 2))
    np.testing.assert_array_equal(emb.points, [[1, 3, 5], [2, 4, 6]])


def test_delay_embed_too_short():
    with pytest.raises(InputSizeError):
        delay_embed(ScalarSeries([1, 2, 3, 4, 5]), EmbeddingParams(3, 2))


@pytest.mark.parametrize("bad", [[1.0, np.nan, 2.0], [np.inf, 1.0]])
def test_series_rejects_non_finite(bad):
    with pytest.raises(ValueError, match="non-finite"):
        ScalarSeries(bad)


def test_series_rejects_single_sample():
    with pytest.raises(InputSizeError):
        ScalarSeries([1.0])


@pytest.mark.parametrize("d,lag", [(0, 1), (1, 0), (2, -1)])
def test_embedding_params_validation(d, lag):
    with pytest.raises(ValueError):
        EmbeddingParams(d, lag)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 60),
    d=st.integers(1, 5),
    lag=st.integers(1, 4),
    seed=st.integers(0, 2**32 - 1),
)
def test_embed_length_and_layout(n, d, lag, seed):
    values = np.random.default_rng(seed).normal(size=n)
    params = EmbeddingParams(d, lag)
    if n - (d - 1) * lag < 2:
        with pytest.raises(InputSizeError):
            delay_embed(ScalarSeries(values), params)
        return
    emb = delay_embed(ScalarSeries(values), params)
    assert len(emb) == n - (d - 1) * lag
    # first coordinate reproduces the source; coordinate k is shifted by k*lag
    np.testing.assert_array_equal(emb.points[:, 0], values[: len(emb)])
    for k in range(d):
        np.testing.assert_array_equal(emb.points[:, k], values[k * lag : k * lag + len(emb)])


# ---------------------------------------------------------------- lag selection


def _brute_profile(values, max_lag, bins):
    codes = list(quantile_codes(np.asarray(values), bins))
    n = len(codes)
    return np.array([oracle.histogram_mi(codes[: n - lag], codes[lag:]) for lag in range(max_lag + 1)])


def _first_local_min(mi, max_lag):
    for lag in range(1, max_lag + 1):
        if mi[lag] < mi[lag - 1] and mi[lag] < mi[lag + 1]:
            return lag, False
    return 1 + int(np.argmin(mi[1 : max_lag + 1])), True


def test_mi_profile_matches_counting_oracle():
    values = np.random.default_rng(3).normal(size=800)
    np.testing.assert_allclose(
        delayed_mutual_information(values, 12, 8), _brute_profile(values, 12, 8), rtol=1e-12, atol=1e-14
    )


def test_noise_lag_at_noise_floor():
    values = np.random.default_rng(0).uniform(size=5000)
    sel = select_lag_mutual_information(ScalarSeries(values), max_lag=20)
    bins = int(np.floor(np.sqrt(5000 / 5)))
    expected = _first_local_min(_brute_profile(values, 21, bins), 20)
    assert (sel.lag, sel.fallback) == expected
    assert sel.lag == 1


def test_logistic_lag_is_first_local_minimum():
    x1, _ = generate_logistic_network(logistic_pair_spec(), seed=1)
    sel = select_lag_mutual_information(x1, max_lag=20)
    bins = int(np.floor(np.sqrt(len(x1) / 5)))
    assert (sel.lag, sel.fallback) == _first_local_min(_brute_profile(x1.values, 21, bins), 20)
    # chaotic map: information decays with lag until the estimator floor
    assert np.all(np.diff(sel.mutual_information[:8]) < 0)


def test_sine_lag_matches_oracle():
    t = np.arange(3000)
    values = np.sin(2 * np.pi * t / 100 + 0.3)
    sel = select_lag_mutual_information(ScalarSeries(values), max_lag=40)
    bins = int(np.floor(np.sqrt(3000 / 5)))
    assert (sel.lag, sel.fallback) == _first_local_min(_brute_profile(values, 41, bins), 40)


def test_lag_selection_input_checks():
    with pytest.raises(InputSizeError):
        select_lag_mutual_information(ScalarSeries(np.arange(20.0)), max_lag=10)
    with pytest.raises(ValueError):
        select_lag_mutual_information(ScalarSeries(np.arange(100.0)), max_lag=5, bins=1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), transform=st.sampled_from(["exp", "cube", "affine", "arctan"]))
def test_mi_lag_invariant_under_monotone_transform(seed, transform):
    values = np.random.default_rng(seed).normal(size=600).cumsum()
    f = {
        "exp": lambda x: np.exp(x / (np.abs(x).max() + 1)),
        "cube": lambda x: x**3,
        "affine": lambda x: 3.0 * x - 7.0,
        "arctan": np.arctan,
    }[transform]
    moved = f(values)
    # monotone transform must not create ties
    if np.unique(moved).size != moved.size:
        return
    a = select_lag_mutual_information(ScalarSeries(values), max_lag=15)
    b = select_lag_mutual_information(ScalarSeries(moved), max_lag=15)
    assert a.lag == b.lag
    np.testing.assert_array_equal(a.mutual_information, b.mutual_information)


# ---------------------------------------------------------- dimension selection


def test_fnn_fraction_matches_brute_force():
    x1, x2 = generate_logistic_network(logistic_pair_spec(mu21=0.2, length=400), seed=5)
    for d in (1, 2, 3):
        assert false_nearest_fraction(x2, d, 1) == pytest.approx(oracle.fnn_fraction(x2.values, d, 1), abs=1e-12)


def test_logistic_pair_dimension_three():
    _, x2 = generate_logistic_network(logistic_pair_spec(mu21=0.3), seed=1)
    sel = select_dimension_fnn(x2, lag=1, max_dim=6)
    assert sel.dimension == 3 and not sel.fallback
    assert sel.fnn_fraction[-1] < 0.01


def test_one_dimensional_invertible_map_orbit():
    # circle rotation is an invertible 1-D map
    values = (0.1 + np.arange(3000) * (np.sqrt(5) - 1) / 2) % 1.0
    values = np.sin(2 * np.pi * values)
    sel = select_dimension_fnn(ScalarSeries(values), lag=1, max_dim=6)
    assert sel.dimension <= 3
    assert oracle.fnn_fraction(values[:1500], sel.dimension, 1) == 0.0


def test_fnn_fallback_flag_on_noise():
    values = np.random.default_rng(1).normal(size=1500)
    sel = select_dimension_fnn(ScalarSeries(values), lag=1, max_dim=3)
    assert sel.fallback and sel.dimension == 3
    assert sel.fnn_fraction[-1] >= 0.01


def test_fnn_input_checks():
    with pytest.raises(InputSizeError):
        select_dimension_fnn(ScalarSeries(np.arange(12.0)), lag=2, max_dim=6)
    with pytest.raises(ValueError):
        select_dimension_fnn(ScalarSeries(np.arange(100.0)), lag=1, max_dim=1)
