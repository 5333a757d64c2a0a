import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smcresample import InvalidCount, InvalidWeights, Rng, normalize, rdd_median_resample
from smcresample.diagnostics import (
    count_bias_probe,
    ess_estimate,
    unique_ancestors,
    weight_variance,
)

positive_lists = st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1, max_size=50)


def test_ess_uniform_is_exact():
    assert ess_estimate(np.full(20, 1 / 20)) == 20.0


def test_ess_one_hot_is_exact():
    w = np.zeros(20)
    w[7] = 1.0
    assert ess_estimate(w) == 1.0


def test_ess_half_half():
    assert ess_estimate([0.5, 0.5, 0.0, 0.0]) == 2.0


def test_ess_rejects_unnormalized():
    with pytest.raises(InvalidWeights):
        ess_estimate([1.0, 1.0])


@given(positive_lists, st.floats(min_value=1e-3, max_value=1e3))
def test_ess_scale_free_and_bounded(raw, c):
    a = ess_estimate(normalize(raw))
    b = ess_estimate(normalize(np.asarray(raw) * c))
    assert a == pytest.approx(b, rel=1e-12)
    assert 1.0 <= a <= len(raw)
    w = normalize(raw)
    assert a == pytest.approx(1.0 / np.sum(w**2), rel=1e-12)


def test_weight_variance_examples():
    assert weight_variance(np.full(8, 1 / 8)) == 0.0
    assert weight_variance([1.0, 0.0]) == 0.25


@given(positive_lists)
def test_weight_variance_identity(raw):
    w = normalize(raw)
    n = len(w)
    assert weight_variance(w) == pytest.approx(np.mean(w**2) - (1 / n) ** 2, abs=1e-15)


def test_unique_ancestors():
    assert unique_ancestors([0, 0, 0]) == 1
    assert unique_ancestors([0, 1, 2, 3]) == 4
    assert unique_ancestors(rdd_median_resample([0.5, 0.3, 0.1, 0.1], 4, Rng(0))) == 3


def test_bias_probe_multinomial_unbiased():
    dev = count_bias_probe("multinomial", [0.5, 0.3, 0.2], 100, 20_000, seed=1)
    assert np.max(np.abs(dev)) < 0.5


def test_bias_probe_rdd_starves_low_weight_index():
    w = [0.5, 0.3, 0.1, 0.1]
    dev = count_bias_probe("rdd", w, 4, 1000, seed=2)
    # index 2 is neither in the integer part nor the median slot
    assert dev[2] == pytest.approx(-0.4, abs=1e-12)


def test_bias_probe_rdd_is_biased_even_with_full_floors():
    w = np.array([0.45, 0.35, 0.2])
    dev = count_bias_probe(rdd_median_resample, w, 20, 2000, seed=3)
    # floors [9, 7, 4] leave no slot: output is deterministic and exact
    assert np.allclose(dev, 0.0)
    w = np.array([0.43, 0.33, 0.24])
    dev = count_bias_probe(rdd_median_resample, w, 20, 2000, seed=3)
    assert np.max(np.abs(dev)) > 0.05


def test_bias_probe_needs_replicates():
    with pytest.raises(InvalidCount):
        count_bias_probe("multinomial", [0.5, 0.5], 10, 999, seed=0)
