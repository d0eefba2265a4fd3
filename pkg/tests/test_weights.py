import math

import numpy as np
import pytest
import scipy.stats

from fpplab import Axis, EdgeId, EdgeWeightField, WeightDistribution, distribution_mean

ALL_DISTRIBUTIONS = [
    WeightDistribution.exponential(1.0),
    WeightDistribution.uniform_shifted(0.0, 2.0),
    WeightDistribution.weibull(1.5, 1.0),
]


def test_edge_id_canonical():
    e = EdgeId.between((3, 4), (2, 4))
    assert e.origin == (2, 4) and e.axis == Axis.HORIZONTAL
    e = EdgeId.between((0, 1), (0, 0))
    assert e.origin == (0, 0) and e.axis == Axis.VERTICAL
    assert EdgeId.between((1, 1), (2, 1)) == EdgeId.between((2, 1), (1, 1))
    with pytest.raises(ValueError):
        EdgeId.between((0, 0), (1, 1))


def test_weight_deterministic(exp1):
    field = EdgeWeightField(exp1, master_seed=99)
    e = EdgeId((12, -3), Axis.VERTICAL)
    assert field.weight(e) == field.weight(e)


def test_window_matches_scalar(exp1):
    field = EdgeWeightField(exp1, master_seed=5, stream_tag=2)
    hw, vw = field.window_weights(-3, 7, 5, 4)
    for j in range(4):
        for i in range(4):
            assert hw[j, i] == field.weight(EdgeId((-3 + i, 7 + j), Axis.HORIZONTAL))
    for j in range(3):
        for i in range(5):
            assert vw[j, i] == field.weight(EdgeId((-3 + i, 7 + j), Axis.VERTICAL))


def test_empirical_mean_exponential(exp1):
    # law of large numbers against the closed-form mean of Exponential(1)
    field = EdgeWeightField(exp1, master_seed=7)
    hw, vw = field.window_weights(0, 0, 708, 708)
    weights = np.concatenate([hw.ravel(), vw.ravel()])
    assert weights.size >= 10**6
    assert abs(weights.mean() - 1.0) < 0.01


def test_stream_tags_independent(exp1):
    field = EdgeWeightField(exp1, master_seed=31)
    other = field.with_stream(1)
    hw0, _ = field.window_weights(0, 0, 318, 318)
    hw1, _ = other.window_weights(0, 0, 318, 318)
    a, b = hw0.ravel()[: 10**5], hw1.ravel()[: 10**5]
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


@pytest.mark.parametrize("dist", ALL_DISTRIBUTIONS, ids=lambda d: d.kind)
def test_ks_gate(dist):
    # generator quality gate at the 0.001 significance level
    field = EdgeWeightField(dist, master_seed=2024)
    hw, vw = field.window_weights(0, 0, 318, 318)
    sample = np.concatenate([hw.ravel(), vw.ravel()])[: 10**5]
    stat = scipy.stats.kstest(sample, dist.cdf).statistic
    threshold = scipy.stats.kstwobign.isf(0.001) / math.sqrt(sample.size)
    assert stat < threshold


def test_avalanche(exp1):
    a = EdgeWeightField(exp1, master_seed=1000)
    b = EdgeWeightField(exp1, master_seed=1001)
    ha, va = a.window_weights(0, 0, 100, 100)
    hb, vb = b.window_weights(0, 0, 100, 100)
    same = (ha == hb).sum() + (va == vb).sum()
    total = ha.size + va.size
    assert same / total < 0.001


@pytest.mark.parametrize("dist", ALL_DISTRIBUTIONS, ids=lambda d: d.kind)
def test_weights_nonnegative_finite(dist):
    field = EdgeWeightField(dist, master_seed=3)
    hw, vw = field.window_weights(-50, -50, 100, 100)
    for arr in (hw, vw):
        assert np.all(arr > 0) and np.all(np.isfinite(arr))


def test_distribution_means():
    assert distribution_mean(WeightDistribution.exponential(1.0)) == 1.0
    assert distribution_mean(WeightDistribution.uniform_shifted(0.0, 2.0)) == 1.0
    assert distribution_mean(WeightDistribution.weibull(1.0, 2.0)) == pytest.approx(2.0)


def test_mgf_radius_metadata():
    assert WeightDistribution.exponential(2.0).mgf_radius() == 2.0
    assert WeightDistribution.uniform_shifted(0.0, 1.0).mgf_radius() == math.inf
    assert WeightDistribution.weibull(1.0, 2.0).mgf_radius() == 0.5
    assert WeightDistribution.weibull(2.0, 1.0).mgf_radius() == math.inf


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        WeightDistribution.weibull(0.5, 1.0)  # heavy tail, no exponential moments
    with pytest.raises(ValueError):
        WeightDistribution.exponential(0.0)
    with pytest.raises(ValueError):
        WeightDistribution.uniform_shifted(2.0, 1.0)
    with pytest.raises(ValueError):
        WeightDistribution("cauchy", 1.0)
