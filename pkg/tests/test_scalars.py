from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genmetric.scalars import (
    Scalar, format_scalar, hamilton, mul, norm, parse_scalar, projective_equiv, real_root,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_real_identity_times_any_tag():
    one = Scalar.real(1.0)
    for x in (Scalar.real(-2.5), Scalar.complex(1.0, 3.0), Scalar.quaternion(1, 2, 3, 4)):
        out = mul(one, x)
        assert out == x


def test_quaternion_basis_relation():
    i = Scalar.quaternion(0, 1, 0, 0)
    j = Scalar.quaternion(0, 0, 1, 0)
    assert mul(i, j).c == (0.0, 0.0, 0.0, 1.0)
    assert mul(j, i).c == (0.0, 0.0, 0.0, -1.0)


def test_conjugate_pair_product_is_two():
    # (1+i)(1-i) = 1 - i^2 = 2
    out = mul(Scalar.complex(1, 1), Scalar.complex(1, -1))
    assert out.tag == "complex"
    assert out.c == (2.0, 0.0)


def test_promotion_never_demotes():
    out = mul(Scalar.real(2.0), Scalar.complex(3.0, 0.0))
    assert out.tag == "complex"
    with pytest.raises(ValueError):
        Scalar.complex(1.0, 0.0).promote("real")


@given(finite)
def test_promotion_round_trip(x):
    q = Scalar.real(x).promote("complex").promote("quaternion")
    assert q.c[0] == x and q.c[1:] == (0.0, 0.0, 0.0)


def test_norm_examples():
    assert norm(Scalar.real(0.0)) == 0.0
    assert norm(Scalar.real(-3.0)) == 3.0
    assert norm(Scalar.quaternion(1, 1, 1, 1)) == 2.0


def test_real_root_examples():
    for k in range(1, 9):
        assert real_root(1.0, k) == 1.0
    assert real_root(8.0, 3) == 2.0
    y = real_root(2.0, 3)
    assert abs(y - 1.2599210498948732) < 1e-15
    assert abs(y**3 - 2.0) < 1e-12
    with pytest.raises(ValueError):
        real_root(-1.0, 3)
    with pytest.raises(ValueError):
        real_root(1.0, 0)


@settings(max_examples=300)
@given(st.floats(1e-6, 1e6), st.integers(1, 8))
def test_real_root_inverts_power(x, k):
    assert real_root(x**k, k) == pytest.approx(x, rel=1e-12)


def test_quaternion_norm_and_associativity_bulk():
    rng = np.random.default_rng(11)
    p, q, r = (rng.normal(size=(10_000, 4)) for _ in range(3))
    pq = hamilton(p, q)
    lhs = np.linalg.norm(pq, axis=1)
    rhs = np.linalg.norm(p, axis=1) * np.linalg.norm(q, axis=1)
    assert np.max(np.abs(lhs - rhs) / rhs) < 1e-12
    a = hamilton(pq, r)
    b = hamilton(p, hamilton(q, r))
    assert np.max(np.linalg.norm(a - b, axis=1) / np.linalg.norm(a, axis=1)) < 1e-12


def test_hamilton_matches_scalar_mul():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.normal(size=4), rng.normal(size=4)
        out = mul(Scalar.quaternion(*a), Scalar.quaternion(*b))
        assert np.allclose(out.c, hamilton(a[None], b[None])[0], rtol=0, atol=1e-15)


def test_projective_examples():
    assert projective_equiv([1, 2], [2, 4])
    assert not projective_equiv([1, 0], [0, 1])
    assert projective_equiv([1 + 1j, 2], [2j, 2 + 2j])
    with pytest.raises(ValueError):
        projective_equiv([0, 0], [1, 2])
    with pytest.raises(ValueError):
        projective_equiv([1], [1, 2])


def test_projective_invariance_under_rescaling():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        lam, mu = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        assert projective_equiv(a, lam * a)
        assert projective_equiv(lam * a, a)
        assert projective_equiv(mu * a, lam * a)


@given(st.lists(st.complex_numbers(max_magnitude=100, min_magnitude=0.1), min_size=1, max_size=4))
def test_projective_reflexive(a):
    assert projective_equiv(a, a)


@given(finite, finite, finite, finite)
def test_literal_round_trip(w, x, y, z):
    q = Scalar.quaternion(w, x, y, z)
    assert parse_scalar(format_scalar(q)) == q


def test_literal_tags():
    assert parse_scalar("3").tag == "real"
    assert parse_scalar("1-2i") == Scalar.complex(1, -2)
    assert parse_scalar("1+2i-0.5j+k") == Scalar.quaternion(1, 2, -0.5, 1)
    with pytest.raises(ValueError):
        parse_scalar("1+2i+3i")


def test_json_encoding():
    s = Scalar.quaternion(1, 2, 3, 4)
    assert s.to_json() == {"tag": "quaternion", "c": [1.0, 2.0, 3.0, 4.0]}
    assert Scalar.from_json(s.to_json()) == s
    assert math.isclose(norm(s), math.sqrt(30))
