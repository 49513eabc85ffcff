"""Coordinate maps with Jacobians.

Every map works on batches of points shaped (M, D). ``jacobian(p_old)`` is
d(new)/d(old) and ``jacobian_inverse(p_new)`` is d(old)/d(new), both shaped
(M, D, D). Maps with ``analytic = True`` supply closed-form Jacobians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


def _pts(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p[None, :] if p.ndim == 1 else p


@dataclass(frozen=True)
class AffineMap:
    """new = A old + b."""

    matrix: np.ndarray
    offset: np.ndarray
    analytic: bool = True

    def __post_init__(self) -> None:
        a = np.array(self.matrix, dtype=float)
        b = np.array(self.offset, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.size:
            raise ValueError("affine map needs a square matrix and a matching offset")
        if abs(np.linalg.det(a)) < 1e-12:
            raise ValueError("affine map matrix is singular")
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "_inv", np.linalg.inv(a))

    @classmethod
    def scaling(cls, factors: Sequence[float]) -> AffineMap:
        f = np.asarray(factors, dtype=float)
        return cls(np.diag(f), np.zeros(f.size))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def forward(self, p) -> np.ndarray:
        return _pts(p) @ self.matrix.T + self.offset

    def inverse(self, q) -> np.ndarray:
        return (_pts(q) - self.offset) @ self._inv.T

    def jacobian(self, p) -> np.ndarray:
        return np.broadcast_to(self.matrix, (len(_pts(p)),) + self.matrix.shape).copy()

    def jacobian_inverse(self, q) -> np.ndarray:
        return np.broadcast_to(self._inv, (len(_pts(q)),) + self._inv.shape).copy()


# Monotone one-dimensional maps: (forward, derivative, inverse).


def _wiggle_inverse(y: np.ndarray) -> np.ndarray:
    x = np.array(y, dtype=float)
    for _ in range(60):
        step = (x + 0.5 * np.sin(x) - y) / (1.0 + 0.5 * np.cos(x))
        x = x - step
        if np.all(np.abs(step) <= 1e-16 * np.maximum(1.0, np.abs(x))):
            break
    return x


def _cubic_inverse(y: np.ndarray) -> np.ndarray:
    # real root of x^3/3 + x - y = 0, polished with Newton
    y = np.asarray(y, dtype=float)
    s = np.sqrt(2.25 * y * y + 1.0)
    x = np.cbrt(1.5 * y + s) + np.cbrt(1.5 * y - s)
    for _ in range(3):
        x = x - (x + x**3 / 3.0 - y) / (1.0 + x * x)
    return x


MONOTONE: dict[str, tuple[Callable, Callable, Callable]] = {
    "identity": (lambda x: x, lambda x: np.ones_like(x), lambda y: y),
    "wiggle": (lambda x: x + 0.5 * np.sin(x), lambda x: 1.0 + 0.5 * np.cos(x), _wiggle_inverse),
    "cubic": (lambda x: x + x**3 / 3.0, lambda x: 1.0 + x * x, _cubic_inverse),
    "sinh": (np.sinh, np.cosh, np.arcsinh),
    "exp": (np.exp, np.exp, np.log),
    "double": (lambda x: 2.0 * x, lambda x: 2.0 * np.ones_like(x), lambda y: 0.5 * y),
}


@dataclass(frozen=True)
class ComponentwiseMap:
    """Applies a monotone one-dimensional map to each axis separately.

    ``kinds`` names one entry of :data:`MONOTONE` per axis.
    """

    kinds: tuple[str, ...]
    analytic: bool = True

    def __post_init__(self) -> None:
        kinds = tuple(self.kinds)
        for k in kinds:
            if k not in MONOTONE:
                raise ValueError(f"unknown monotone map {k!r}")
        object.__setattr__(self, "kinds", kinds)

    @property
    def dim(self) -> int:
        return len(self.kinds)

    def _apply(self, p, slot: int) -> np.ndarray:
        p = _pts(p)
        out = np.empty_like(p)
        for i, k in enumerate(self.kinds):
            out[:, i] = MONOTONE[k][slot](p[:, i])
        return out

    def forward(self, p) -> np.ndarray:
        return self._apply(p, 0)

    def inverse(self, q) -> np.ndarray:
        return self._apply(q, 2)

    def jacobian(self, p) -> np.ndarray:
        d = self._apply(p, 1)
        return np.einsum("mi,ij->mij", d, np.eye(self.dim))

    def jacobian_inverse(self, q) -> np.ndarray:
        d = self._apply(self.inverse(q), 1)
        return np.einsum("mi,ij->mij", 1.0 / d, np.eye(self.dim))


@dataclass(frozen=True)
class HypersphericalMap:
    """Cartesian block -> (radius, angles) on axes [start, start + n).

    x1 = r cos a1, x2 = r sin a1 cos a2, ..., xn = r sin a1 ... sin a_{n-1},
    with a1..a_{n-2} in [0, pi] and the last angle in [0, 2 pi). Other axes
    pass through unchanged.
    """

    dim: int
    start: int
    n: int
    analytic: bool = True

    def __post_init__(self) -> None:
        if self.n < 2 or self.start < 0 or self.start + self.n > self.dim:
            raise ValueError("bad hyperspherical block")

    def _block(self) -> slice:
        return slice(self.start, self.start + self.n)

    def forward(self, p) -> np.ndarray:
        p = _pts(p)
        x = p[:, self._block()]
        out = p.copy()
        n = self.n
        r = np.linalg.norm(x, axis=1)
        polar = np.empty((len(p), n))
        polar[:, 0] = r
        for a in range(n - 2):
            tail = np.linalg.norm(x[:, a + 1:], axis=1)
            polar[:, a + 1] = np.arctan2(tail, x[:, a])
        phi = np.arctan2(x[:, n - 1], x[:, n - 2])
        polar[:, n - 1] = np.mod(phi, 2.0 * math.pi)
        out[:, self._block()] = polar
        return out

    def inverse(self, q) -> np.ndarray:
        q = _pts(q)
        polar = q[:, self._block()]
        out = q.copy()
        out[:, self._block()] = self._cartesian(polar)
        return out

    def _cartesian(self, polar: np.ndarray) -> np.ndarray:
        n = self.n
        r, ang = polar[:, 0], polar[:, 1:]
        x = np.empty_like(polar)
        sprod = r.copy()
        for a in range(n - 1):
            x[:, a] = sprod * np.cos(ang[:, a])
            sprod = sprod * np.sin(ang[:, a])
        x[:, n - 1] = sprod
        return x

    def _polar_jacobian(self, polar: np.ndarray) -> np.ndarray:
        """d(cartesian)/d(polar) for the block."""
        n = self.n
        m = len(polar)
        r, ang = polar[:, 0], polar[:, 1:]
        s, c = np.sin(ang), np.cos(ang)
        jac = np.zeros((m, n, n))
        for a in range(n):
            # x_a = r * prod_{b<a} s_b * (c_a if a < n-1 else 1)
            prod = np.ones(m)
            for b in range(a):
                prod = prod * s[:, b]
            last = c[:, a] if a < n - 1 else np.ones(m)
            jac[:, a, 0] = prod * last
            for b in range(min(a + 1, n - 1)):
                # derivative w.r.t. angle b
                term = r.copy()
                for bb in range(a):
                    term = term * (c[:, bb] if bb == b else s[:, bb])
                if a < n - 1:
                    term = term * (-s[:, a] if a == b else c[:, a])
                jac[:, a, b + 1] = term
        return jac

    def jacobian_inverse(self, q) -> np.ndarray:
        q = _pts(q)
        out = np.broadcast_to(np.eye(self.dim), (len(q), self.dim, self.dim)).copy()
        out[:, self._block(), self._block()] = self._polar_jacobian(q[:, self._block()])
        return out

    def jacobian(self, p) -> np.ndarray:
        return np.linalg.inv(self.jacobian_inverse(self.forward(p)))


@dataclass(frozen=True)
class NumericMap:
    """User-supplied map pair with central-difference Jacobians.

    The step is 1e-6 * (1 + |p_i|) per coordinate.
    """

    dim: int
    fwd: Callable[[np.ndarray], np.ndarray]
    inv: Callable[[np.ndarray], np.ndarray]
    analytic: bool = False

    def forward(self, p) -> np.ndarray:
        return np.asarray(self.fwd(_pts(p)), dtype=float)

    def inverse(self, q) -> np.ndarray:
        return np.asarray(self.inv(_pts(q)), dtype=float)

    @staticmethod
    def _fd(f: Callable, p: np.ndarray) -> np.ndarray:
        p = _pts(p)
        m, d = p.shape
        jac = np.empty((m, d, d))
        for j in range(d):
            h = 1e-6 * (1.0 + np.abs(p[:, j]))
            up, dn = p.copy(), p.copy()
            up[:, j] += h
            dn[:, j] -= h
            jac[:, :, j] = (f(up) - f(dn)) / (2.0 * h)[:, None]
        return jac

    def jacobian(self, p) -> np.ndarray:
        return self._fd(self.forward, p)

    def jacobian_inverse(self, q) -> np.ndarray:
        return self._fd(self.inverse, q)


def random_map(rng: np.random.Generator, dim: int, kind: str | None = None):
    """Draw a map from the built-in analytic family.

    Kinds: ``rotation`` (orthogonal matrix), ``affine`` (well-conditioned
    matrix plus offset) and ``componentwise`` (monotone map per axis).
    """
    kinds = ("rotation", "affine", "componentwise")
    kind = kind or kinds[rng.integers(len(kinds))]
    if kind == "rotation":
        q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
        q = q * np.sign(np.diag(r))
        return AffineMap(q, np.zeros(dim))
    if kind == "affine":
        a = np.eye(dim) + 0.3 * rng.normal(size=(dim, dim)) / math.sqrt(dim)
        return AffineMap(a, 0.5 * rng.normal(size=dim))
    if kind == "componentwise":
        names = ("identity", "wiggle", "cubic", "sinh", "double")
        return ComponentwiseMap(tuple(names[i] for i in rng.integers(len(names), size=dim)))
    raise ValueError(f"unknown map kind {kind!r}")
