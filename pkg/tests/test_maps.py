from __future__ import annotations

import numpy as np
import pytest

from genmetric.maps import AffineMap, ComponentwiseMap, HypersphericalMap, NumericMap, random_map


def _fd_jacobian(f, p, h=1e-6):
    d = p.size
    out = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        out[:, j] = (f(p + e)[0] - f(p - e)[0]) / (2 * h)
    return out


@pytest.mark.parametrize("kind", ["rotation", "affine", "componentwise"])
def test_random_maps_invert_and_differentiate(kind):
    rng = np.random.default_rng(8)
    for _ in range(10):
        f = random_map(rng, 3, kind)
        p = rng.uniform(-1, 1, size=3)
        q = f.forward(p)
        assert np.allclose(f.inverse(q)[0], p, atol=1e-12)
        assert np.allclose(f.jacobian(p)[0], _fd_jacobian(f.forward, p), atol=1e-6)
        prod = f.jacobian(p)[0] @ f.jacobian_inverse(q)[0]
        assert np.allclose(prod, np.eye(3), atol=1e-12)


def test_hyperspherical_round_trip_and_jacobian():
    f = HypersphericalMap(4, 1, 3)
    rng = np.random.default_rng(2)
    for _ in range(10):
        p = rng.normal(size=4)
        q = f.forward(p)
        assert 0 <= q[0, 2] <= np.pi and 0 <= q[0, 3] < 2 * np.pi
        assert np.allclose(f.inverse(q)[0], p, atol=1e-12)
        assert np.allclose(f.jacobian_inverse(q)[0], _fd_jacobian(f.inverse, q[0]), atol=1e-6)


def test_numeric_map_uses_differences():
    g = AffineMap([[2.0, 1.0], [0.0, 1.0]], [0.5, -1.0])
    f = NumericMap(2, g.forward, g.inverse)
    assert not f.analytic
    p = np.array([0.3, 0.4])
    assert np.allclose(f.jacobian(p)[0], g.matrix, atol=1e-8)


def test_singular_affine_map_rejected():
    with pytest.raises(ValueError):
        AffineMap([[1.0, 2.0], [2.0, 4.0]], [0.0, 0.0])
    with pytest.raises(ValueError):
        ComponentwiseMap(("nope",))
