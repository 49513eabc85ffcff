from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genmetric.catalog import build, list_ids
from genmetric.maps import AffineMap, ComponentwiseMap, random_map
from genmetric.scalars import Scalar
from genmetric.tensor import (
    Axis, Chart, ChartError, MetricSpec, TensorError, TensorField, contract_table, eval_component,
    line_element, line_element_batch, lower_vector, reduce_to_bilinear, transform_metric, transform_tensor,
)


def test_cubic_components():
    t = build("cubic2d").tensor
    # index 0 is x and 1 is y
    assert eval_component(t, (1, 1, 1), [0.3, -2.0]) == Scalar.real(1.0)
    assert eval_component(t, (0, 0, 0), [5.0, 1.0]) == Scalar.real(1.0)
    assert eval_component(t, (0, 0, 1), [0.3, -2.0]) == Scalar.real(0.0)
    with pytest.raises(TensorError):
        eval_component(t, (0, 0), [0.0, 0.0])
    with pytest.raises(TensorError):
        eval_component(t, (0, 0, 2), [0.0, 0.0])


def test_flrw_spatial_component_is_scale_squared():
    t = build("flrw", {"a": "2"}).tensor
    assert eval_component(t, (1, 1), [0.7, 0.0, 1.0, 2.0]) == Scalar.real(4.0)


def test_out_of_bounds_point_is_rejected():
    t = build("epflrw").tensor  # probability axis lives in [0, 1]
    with pytest.raises(ChartError):
        eval_component(t, (0, 0), [0.0, 0.0, 0.0, 0.0, 1.5])


def test_line_element_examples():
    assert line_element(build("euclidean"), [0, 0], [3, 4]) == Scalar.real(25.0)
    assert line_element(build("cubic2d"), [0, 0], [1, 1]) == Scalar.real(2.0)
    assert line_element(build("complex_cubic3d"), [0, 0, 0], [1, 0, 0]) == Scalar.complex(0.0, -1.0)


def test_upper_indices_need_lowering():
    chart = Chart.simple(["x", "y"])
    t = TensorField((1, 1), chart, "real", {(0, 0): "1", (1, 1): "1"}, "separately-symmetric")
    with pytest.raises(TensorError):
        MetricSpec(t)
    g = TensorField((0, 2), chart, "real", {(0, 0): "2", (1, 1): "3"}, "fully-symmetric")
    m = MetricSpec(t, g)
    # F^0_0 w_0 dc^0 + F^1_1 w_1 dc^1 with w = g dc
    assert line_element(m, [0, 0], [1, 2]).c[0] == pytest.approx(2 * 1 + 3 * 4)


def test_lower_vector():
    eye = build("euclidean", {"D": 3})
    assert np.array_equal(lower_vector(eye, [0, 0, 0], [1, 2, 3]), [1, 2, 3])
    assert np.array_equal(lower_vector(build("minkowski"), [0] * 4, [1, 0, 0, 0]), [-1, 0, 0, 0])
    assert np.array_equal(lower_vector(build("flrw", {"a": "2"}), [0] * 4, [0, 1, 0, 0]), [0, 4, 0, 0])


def test_reduce_to_bilinear():
    g = build("euclidean").tensor
    assert reduce_to_bilinear(g, []).components == g.components
    cubic = build("cubic2d").tensor
    flat = reduce_to_bilinear(cubic, [["1", "1"]])
    assert flat.dense([0.0, 0.0])[..., 0].tolist() == [[1.0, 0.0], [0.0, 1.0]]
    split = reduce_to_bilinear(cubic, [["1", "-1"]])
    assert split.dense([0.0, 0.0])[..., 0].tolist() == [[1.0, 0.0], [0.0, -1.0]]
    with pytest.raises(TensorError):
        reduce_to_bilinear(TensorField((0, 1), cubic.chart, "real", {(0,): "1"}), [])


def test_identity_map_leaves_components():
    m = build("flrw", {"a": "exp(t)"})
    f = ComponentwiseMap(("identity",) * 4)
    p = np.array([0.4, 1.0, -2.0, 0.5])
    table = transform_tensor(m.tensor, f, p)
    assert np.allclose(table.values[..., 0], m.tensor.dense(p)[..., 0], rtol=0, atol=0)


def test_doubling_map_quarters_euclidean_components():
    table = transform_tensor(build("euclidean").tensor, AffineMap.scaling([2, 2]), [1.0, 1.0])
    assert np.allclose(table.values[..., 0], 0.25 * np.eye(2))


@pytest.mark.parametrize("name", list_ids())
def test_line_element_invariance_per_entry(name):
    m = build(name)
    rng = np.random.default_rng(17)
    for _ in range(25):
        f = random_map(rng, m.tensor.dim)
        p = m.chart.sample(rng, 1)
        dc = rng.normal(size=m.tensor.dim)
        table, aux = transform_metric(m, f, f.forward(p))
        new = contract_table(table, f.jacobian(p)[0] @ dc, aux).c
        old = line_element(m, p[0], dc).c
        scale = max(1.0, float(np.max(np.abs(old))))
        assert np.max(np.abs(np.subtract(new, old))) < 1e-10 * scale


def test_transform_then_inverse_recovers_components():
    rng = np.random.default_rng(4)
    m = build("flrw", {"a": "1 + t^2"})
    for _ in range(20):
        f = random_map(rng, 4)
        p = m.chart.sample(rng, 1)[0]
        q = f.forward(p)[0]
        table = transform_tensor(m.tensor, f, q)
        j = f.jacobian(p[None])[0]
        back = j.T @ table.values[..., 0] @ j
        assert np.allclose(back, m.tensor.dense(p)[..., 0], rtol=0, atol=1e-9)


@settings(max_examples=60)
@given(st.sampled_from(["euclidean", "cubic2d", "complex_cubic3d", "flrw", "functional7d"]),
       st.floats(-3, 3, allow_nan=False), st.integers(0, 2**31))
def test_homogeneity(name, alpha, seed):
    m = build(name)
    rng = np.random.default_rng(seed)
    p = m.chart.sample(rng, 1)
    dc = rng.normal(size=m.tensor.dim)
    order = sum(m.rank)
    a = line_element_batch(m, p, alpha * dc[None])[0]
    b = alpha**order * line_element_batch(m, p, dc[None])[0]
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * max(1.0, abs(alpha)) ** order)


def test_empty_field_is_zero():
    t = TensorField((0, 2), Chart.simple(["u", "v"]), "real", {})
    assert line_element(t, [1, 2], [3, 4]) == Scalar.real(0.0)


def test_chart_validation():
    with pytest.raises(TensorError):
        Chart((Axis("x"), Axis("x")))
    with pytest.raises(TensorError):
        Axis("x", "colour")
    with pytest.raises(TensorError):
        TensorField((0, 2), Chart.simple(["x"]), "real", {(0, 1): "1"})
    with pytest.raises(TensorError):
        TensorField((0, 2), Chart.simple(["x"]), "real", {(0, 0): "y"})


def test_json_round_trip():
    m = build("perturbed_ads", {"k": 1, "Psi": "0.1*r"})
    t = m.tensor
    back = TensorField.from_json(t.to_json())
    assert back == t
    assert MetricSpec.from_json(m.to_json()).tensor == t
    p = np.array([[0.5, 0.7, 1.0, 2.0]])
    assert line_element_batch(back, p, p)[0, 0] == line_element_batch(t, p, p)[0, 0]


def test_symmetrized_is_opt_in():
    chart = Chart.simple(["x", "y"])
    t = TensorField((0, 3), chart, "real", {(0, 0, 1): "3"})
    assert t.symmetry == "none" and len(t.components) == 1
    s = t.symmetrized()
    assert len(s.components) == 3
    assert math.isclose(s.dense([0, 0])[0, 1, 0, 0], 1.0)
