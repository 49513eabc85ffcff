from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genmetric.catalog import build
from genmetric.checker import check_symmetry
from genmetric.hessian_warped import (
    ConstructionError, Potential, WarpSpec, default_step, flrw_warp_spec, hessian_field, hessian_metric,
    reference_sphere_fiber, verify_flrw_warped, warped_product,
)
from genmetric.tensor import Axis, Chart, TensorField, line_element

XY = Chart.simple(["x", "y"])


def _euclid(names):
    return TensorField((0, 2), Chart.simple(names), "real", {(i, i): "1" for i in range(len(names))},
                       "fully-symmetric")


def test_quadratic_potential_gives_identity():
    h = hessian_metric(Potential("(x^2 + y^2)/2", XY), 2, [0.3, -0.7])
    assert np.allclose(h.table.values[..., 0], np.eye(2), atol=1e-8)


def test_bilinear_potential():
    h = hessian_metric(Potential("x*y", XY), 2, [1.5, 0.2])
    assert np.allclose(h.table.values[..., 0], [[0, 1], [1, 0]], atol=1e-8)


def test_cubic_potential_reproduces_catalog_entry():
    h = hessian_metric(Potential("(x^3 + y^3)/6", XY), 3, [0.4, -0.2])
    cubic = build("cubic2d").tensor.dense([0.4, -0.2])
    for idx in np.ndindex(2, 2, 2):
        assert h.component(idx) == pytest.approx(float(cubic[idx][0]), abs=1e-6)


def test_symbolic_hessian_matches_finite_differences():
    phi = Potential("exp(x) * sin(y) + x^4", XY)
    exact = hessian_field(phi, 2)
    h = hessian_metric(phi, 2, [0.2, 0.9])
    assert np.allclose(h.table.values, exact.dense([0.2, 0.9]), atol=1e-6)


def test_fourth_order_is_symmetric():
    phi = Potential("x^2 * y^2 + x^4", XY)
    h = hessian_metric(phi, 4, [0.5, 0.5])
    assert h.component((0, 0, 1, 1)) == pytest.approx(4.0, abs=1e-2)
    assert h.component((0, 1, 0, 1)) == h.component((1, 1, 0, 0))


def test_symbolic_output_passes_symmetry_check():
    assert check_symmetry(hessian_field(Potential("x^3*y + y^4", XY), 3), 16, 0).status == "pass"


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_polynomial_asymmetry_is_small(a, b, x, y):
    h = hessian_metric(Potential(f"{a}*x^3 + {b}*x*y^2 + x^2*y", XY), 3, [x, y], fd_step=1e-3)
    assert h.asymmetry < 10 * 1e-3 ** 2


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_quadratic_hessian_is_point_independent(pts):
    phi = Potential("3*x^2 - x*y + 0.5*y^2", XY)
    a = hessian_metric(phi, 2, pts[:2]).table.values
    b = hessian_metric(phi, 2, pts[2:]).table.values
    assert np.allclose(a, b, atol=1e-8)


def test_default_step_scales_with_order_and_coordinate():
    s = default_step(2, [0.0, 9.0])
    assert s[0] == pytest.approx(np.finfo(float).eps ** 0.25) and s[1] == pytest.approx(10 * s[0])
    assert default_step(4, [0.0])[0] > s[0]


def test_hessian_errors():
    with pytest.raises(ConstructionError):
        hessian_metric(Potential("x", XY), 5, [0, 0])
    with pytest.raises(ConstructionError):
        hessian_metric(Potential("x", XY), 2, [0, 0], fd_step=0)
    with pytest.raises(ConstructionError):
        hessian_metric(Potential("log(x)", XY), 2, [0, 0])
    with pytest.raises(ConstructionError):
        Potential("x + z", XY)


def test_warped_flrw_matches_catalog_exactly():
    for a in ("1", "exp(t)", "t^2"):
        ok, dev = verify_flrw_warped(a)
        assert ok and dev < 1e-14
    g = warped_product(flrw_warp_spec("exp(t)", c=2.0)).tensor
    direct = build("flrw", {"a": "exp(t)", "c": 2.0}).tensor
    p = [0.3, 1.0, 2.0, 3.0]
    assert np.array_equal(g.dense(p), direct.dense(p))


def test_unit_warp_gives_direct_sum():
    w = warped_product(WarpSpec(_euclid(["x", "y"]), _euclid(["u", "v", "w"]), "1"))
    assert w.tensor.components == _euclid(["x", "y", "u", "v", "w"]).components


def test_sphere_fiber():
    base = TensorField((0, 2), Chart((Axis("t", "time"),)), "real", {(0, 0): "-1"}, "fully-symmetric")
    g = warped_product(WarpSpec(base, reference_sphere_fiber(), "2 + t^2")).tensor
    t, theta = 0.5, 1.1
    dense = g.dense([t, theta, 0.4])[..., 0]
    f2 = (2 + t * t) ** 2
    assert np.allclose(dense, np.diag([-1.0, f2, f2 * math.sin(theta) ** 2]), rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3), st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_fiber_displacement_scales_by_squared_warp(t, x, v):
    m = warped_product(flrw_warp_spec("1 + t^2"))
    point = [t, *x]
    le = line_element(m, point, [0.0, *v]).c[0]
    assert le == pytest.approx((1 + t * t) ** 2 * sum(c * c for c in v), rel=1e-12, abs=1e-300)


def test_warp_errors():
    with pytest.raises(ConstructionError):
        warped_product(WarpSpec(_euclid(["x"]), _euclid(["u"]), "x - 100"))
    with pytest.raises(ConstructionError):
        WarpSpec(_euclid(["x"]), _euclid(["u"]), "u")
    with pytest.raises(ConstructionError):
        WarpSpec(_euclid(["x"]), _euclid(["x"]), "1")
    with pytest.raises(ConstructionError):
        WarpSpec(build("cubic2d").tensor, _euclid(["u"]), "1")
