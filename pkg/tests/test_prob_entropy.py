from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genmetric._special import simpson_weights
from genmetric.catalog import build
from genmetric.prob_entropy import (
    DensitySpec, EntropyError, GaussianParams, entropy_substitute, gaussian_factor, integrate_entropy,
    potential_from_gaussian, shannon_entropy, shannon_information,
)
from genmetric.tensor import line_element

SIGMA_ONE = 1 / math.sqrt(2 * math.pi)


def test_gaussian_factor_examples():
    assert gaussian_factor(0.3, GaussianParams(0.3, 1.0)) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert gaussian_factor(2.0, GaussianParams(2.0, SIGMA_ONE)) == pytest.approx(1.0, rel=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 20))
def test_gaussian_integrates_to_one(mean, sigma):
    g = GaussianParams(mean, sigma)
    x = np.linspace(mean - 12 * sigma, mean + 12 * sigma, 10001)
    w = simpson_weights(10000, x[1] - x[0])
    assert abs(w @ gaussian_factor(x, g) - 1) < 1e-8


def test_potential_examples():
    assert potential_from_gaussian(GaussianParams(0.0, SIGMA_ONE), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert potential_from_gaussian(GaussianParams(0.0, 1.0), 0.0) == pytest.approx(-0.45946926660233633, rel=1e-14)
    assert potential_from_gaussian(GaussianParams(0.0, 1.0), 0.0, sign=-1) == pytest.approx(0.45946926660233633)
    with pytest.raises(EntropyError):
        potential_from_gaussian(GaussianParams(0.0, 1.0), 0.0, sign=2)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 10), st.floats(-10, 10))
def test_potential_round_trip(mean, sigma, x):
    g = GaussianParams(mean, sigma)
    assert math.exp(2 * potential_from_gaussian(g, x)) == pytest.approx(gaussian_factor(x, g), rel=1e-12)


def test_gaussian_params_validation():
    for bad in ((0.0, 0.0), (0.0, -1.0), (math.nan, 1.0), (0.0, math.inf)):
        with pytest.raises(EntropyError):
            GaussianParams(*bad)


def test_information_examples():
    assert shannon_information(1.0) == 0.0
    assert shannon_information(0.5) == pytest.approx(math.log(2), rel=1e-15)
    assert shannon_information(1 / math.e) == pytest.approx(1.0, rel=1e-15)
    for bad in (0.0, -0.1, 1.01):
        with pytest.raises(EntropyError):
            shannon_information(bad)


@settings(max_examples=100)
@given(st.floats(1e-300, 1.0))
def test_information_inverts_log(p):
    assert abs(shannon_information(p) + math.log(p)) <= 1e-15 * max(1.0, abs(math.log(p)))


def test_entropy_examples():
    assert shannon_entropy(DensitySpec("1", [(0, 1)])) == pytest.approx(0.0, abs=1e-15)
    assert shannon_entropy(DensitySpec("1/2", [(0, 2)])) == pytest.approx(math.log(2), abs=1e-6)
    normal = DensitySpec("exp(-x^2/2)/sqrt(2*pi)", [(-10, 10)])
    assert shannon_entropy(normal) == pytest.approx(1.4189385332046727, abs=1e-4)


@pytest.mark.parametrize("width", [0.5, 1.0, 2.0, 5.0])
def test_uniform_entropy_is_log_width(width):
    assert shannon_entropy(DensitySpec(f"1/{width}", [(0, width)])) == pytest.approx(math.log(width), abs=1e-6)


def test_entropy_over_several_intervals_and_zero_density():
    r = integrate_entropy(DensitySpec(lambda x: np.where(x < 1, 0.0, 1.0), [(-1, 0.5), (1, 2)], nodes=101))
    assert r.value == 0.0 and r.mass == pytest.approx(1.0) and r.intervals == 2
    assert r.to_json()["log_base"] == "e"


def test_entropy_errors():
    with pytest.raises(EntropyError):
        shannon_entropy(DensitySpec("x - 0.5", [(0, 1)]))
    with pytest.raises(EntropyError):
        shannon_entropy(DensitySpec("2", [(0, 1)]))
    with pytest.raises(EntropyError):
        shannon_entropy(DensitySpec("1/x", [(0, 1)]))
    with pytest.raises(EntropyError):
        DensitySpec("y", [(0, 1)])
    with pytest.raises(EntropyError):
        DensitySpec("1", [(1, 0)])


def _time(m, point):
    return float(m.tensor.dense(point)[0, 0, 0])


def test_identity_substitution_changes_nothing():
    mink = build("minkowski")
    for mode in ("as-printed", "chain-rule"):
        out = entropy_substitute(mink, "t", mode)
        assert out.chart.names[0] == "S" and out.chart.axes[0].role == "entropy"
        assert np.array_equal(out.tensor.dense([0.1, 0, 0, 0]), mink.tensor.dense([0.1, 0, 0, 0]))


def test_doubling_substitution():
    mink = build("minkowski")
    chain = entropy_substitute(mink, "2*t", "chain-rule")
    printed = entropy_substitute(mink, "2*t", "as-printed")
    assert _time(chain, [0.3, 0, 0, 0]) == pytest.approx(-0.25)
    assert _time(printed, [0.3, 0, 0, 0]) == pytest.approx(-4.0)
    assert line_element(chain, [0.3, 0, 0, 0], [2.0, 0, 0, 0]).c[0] == pytest.approx(-1.0)


def test_chain_rule_preserves_line_element_for_nonlinear_entropy():
    flrw = build("flrw", {"a": "exp(t)"})
    out = entropy_substitute(flrw, "t^3 + t", "chain-rule", bracket=(-5, 5))
    t, x = 0.4, np.array([0.1, 0.2, 0.3])
    dt, dx = 0.7, np.array([1.0, -1.0, 0.5])
    s, ds = t ** 3 + t, (3 * t * t + 1) * dt
    before = line_element(flrw, [t, *x], [dt, *dx]).c[0]
    after = line_element(out, [s, *x], [ds, *dx]).c[0]
    assert after == pytest.approx(before, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5), st.floats(-3, 3), st.floats(-2, 2))
def test_chain_rule_then_inverse_recovers_components(scale, shift, t):
    flrw = build("flrw", {"a": "1 + t^2"})
    forward = entropy_substitute(flrw, f"{scale}*t + {shift}", "chain-rule")
    back = entropy_substitute(forward, f"(S - {shift})/{scale}", "chain-rule", time_axis="S", new_name="t")
    p = [t, 0.1, 0.2, 0.3]
    assert np.allclose(back.tensor.dense(p), flrw.tensor.dense(p), rtol=1e-8, atol=1e-12)


def test_substitution_errors():
    mink = build("minkowski")
    with pytest.raises(EntropyError):
        entropy_substitute(mink, "t^2", "chain-rule")
    with pytest.raises(EntropyError):
        entropy_substitute(mink, "t", "sideways")
    with pytest.raises(EntropyError):
        entropy_substitute(mink, "t + x", "as-printed")
    with pytest.raises(EntropyError):
        entropy_substitute(build("cubic2d"), "t")
