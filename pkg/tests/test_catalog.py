from __future__ import annotations

import math

import numpy as np
import pytest

from genmetric.catalog import CatalogError, build, catalog_document, list_ids, shipped_catalog
from genmetric.checker import check_symmetry
from genmetric.maps import HypersphericalMap
from genmetric.scalars import Scalar
from genmetric.tensor import eval_component, line_element, transform_tensor

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def test_listing():
    ids = list_ids()
    assert len(ids) >= 16 and len(set(ids)) == len(ids)
    for name in ("flrw", "cubic2d", "hipest", "pestmmp", "sssgcpst"):
        assert name in ids
    assert ids == list_ids()


@pytest.mark.parametrize("name", list_ids())
def test_defaults_build_and_are_symmetric(name):
    m = build(name)
    assert check_symmetry(m.tensor, samples=100, seed=1).status == "pass"


def test_shipped_catalog_matches_code():
    assert shipped_catalog() == catalog_document()


def test_cubic_table():
    t = build("cubic2d").tensor
    assert set(t.components) == {(0, 0, 0), (1, 1, 1)}


def test_flrw_unit_scale_is_minkowski():
    assert line_element(build("flrw", {"a": "1", "c": 1}), [3.0, 0, 0, 0], [1, 0, 0, 0]) == Scalar.real(-1.0)
    f, m = build("flrw").tensor, build("minkowski").tensor
    pts = f.chart.sample(np.random.default_rng(0), 200)
    a, b = f.evaluate(pts), m.evaluate(pts)
    assert a.keys() == b.keys()
    for idx in a:
        assert np.array_equal(a[idx], b[idx])


def test_gaussian_flrw_at_means_is_flrw():
    params = {"Psi_g": "0.3", "Psi_mean": 0.3, "Phi_g": "-1", "Phi_mean": -1.0,
              "Psi_sigma": INV_SQRT_2PI, "Phi_sigma": INV_SQRT_2PI, "a": "exp(t)"}
    g = build("gpflrw", params).tensor
    f = build("flrw", {"a": "exp(t)"}).tensor
    pts = f.chart.sample(np.random.default_rng(1), 200)
    a, b = g.evaluate(pts), f.evaluate(pts)
    for idx in b:
        assert np.max(np.abs(a[idx] - b[idx])) < 1e-12


def test_flat_perturbed_spacetime_is_minkowski_in_spherical_coordinates():
    ads = build("perturbed_ads", {"k": 0, "Psi": "0", "Phi": "0", "a": "1", "D_tau": 1, "D_r": 3}).tensor
    mink = build("minkowski").tensor
    f = HypersphericalMap(4, 1, 3)
    rng = np.random.default_rng(2)
    for p in ads.chart.sample(rng, 50):
        pulled = transform_tensor(mink, f, p).values[..., 0]
        assert np.max(np.abs(pulled - ads.dense(p)[..., 0])) < 1e-12


def test_probability_extension_keeps_spacetime_block():
    e = build("epflrw", {"Psi": "0.1*t", "Phi": "x1"}).tensor
    d = e.dense([0.5, 0.2, 0.0, 0.0, 0.5])[..., 0]
    assert d[0, 0] == pytest.approx(-math.exp(0.1))
    assert d[1, 1] == pytest.approx(math.exp(-0.4))
    assert d[4, 4] == 1.0
    assert np.count_nonzero(d - np.diag(np.diag(d))) == 0


def test_probability_time_space_signs():
    m = build("hipest", {"a": "1", "P_tau": "1", "D_P": 1, "D_tau": 1, "D_x": 1})
    assert line_element(m, [0.5, 0.0, 0.0], [1, 1, 1]) == Scalar.real(1.0)


def test_curvature_profile_at_quarter_turn():
    t = build("perturbed_ads", {"k": 1}).tensor
    # angular component carries sk(r, 1)^2 = sin(r)^2 times the flat factor
    v = eval_component(t, (2, 2), [1.0, math.pi / 2, 1.0, 1.0]).c[0]
    assert v == pytest.approx(1.0, abs=1e-15)


def test_seventh_order_entry():
    m = build("functional7d")
    assert m.rank == (0, 7) and m.tensor.codomain == "complex"
    out = line_element(m, [0.1] * 7, [1, 0, 0, 0, 0, 0, 0])
    assert out == Scalar.complex(0.0, -1.0)


@pytest.mark.parametrize("name,params", [
    ("nope", {}),
    ("perturbed_ads", {"k": 2}),
    ("gpflrw", {"Psi_sigma": 0.0}),
    ("euclidean", {"D": 0}),
    ("flrw", {"b": "1"}),
    ("flrw", {"a": "1 +"}),
    ("entropic_replacing", {"chain_rule": "yes"}),
])
def test_bad_parameters(name, params):
    with pytest.raises(CatalogError):
        build(name, params)


def test_entropic_flag_switches_gradient_factor():
    printed = build("entropic_replacing", {"grad_S": "2"}).tensor.dense([0.0, 1.0, 1.0, 1.0])
    chain = build("entropic_replacing", {"grad_S": "2", "chain_rule": True}).tensor.dense([0.0, 1.0, 1.0, 1.0])
    assert printed[0, 0, 0] == -4.0
    assert chain[0, 0, 0] == -0.25
