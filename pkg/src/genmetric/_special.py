"""Small numeric kernels shared by the expression evaluator and the
probability helpers. Kept free of package imports to avoid cycles."""

from __future__ import annotations

import math

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian(x, mean, sigma):
    """Normal density exp(-((x - mean) / sigma)^2 / 2) / (sqrt(2 pi) sigma)."""
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("gaussian width must be positive")
    z = (x - mean) / sigma
    return np.exp(-0.5 * z * z) / (SQRT_2PI * sigma)


def curvature_profile(r, k):
    """Radial profile S_k(r): sin for k > 0, identity for k = 0, sinh for k < 0."""
    r = np.asarray(r, dtype=float)
    k = np.asarray(k, dtype=float)
    root = np.sqrt(np.abs(k))
    safe = np.where(root == 0.0, 1.0, root)
    pos = np.sin(r * safe) / safe
    neg = np.sinh(r * safe) / safe
    return np.where(k > 0, pos, np.where(k < 0, neg, r))


def bump(x, lo, hi):
    """Smooth bump supported on (lo, hi), equal to 1 at the midpoint."""
    x = np.asarray(x, dtype=float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    if np.any(np.asarray(half) <= 0):
        raise ValueError("bump needs lo < hi")
    u = (x - mid) / half
    inside = np.abs(u) < 1.0
    den = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, np.exp(1.0 - 1.0 / den), 0.0)


def simpson_weights(n_intervals: int, h: float = 1.0) -> np.ndarray:
    """Composite Simpson weights on n_intervals + 1 equispaced nodes.

    Odd interval counts close with a 3/8 rule on the last three intervals.
    A single interval falls back to the trapezoid rule.
    """
    n = int(n_intervals)
    if n < 1:
        raise ValueError("need at least one interval")
    w = np.zeros(n + 1)
    if n == 1:
        w[:] = 0.5
        return w * h
    if n % 2 == 0:
        even = n
        tail = 0
    else:
        even = n - 3
        tail = 3
    if even > 0:
        w[0:even + 1:2] += 2.0 / 3.0
        w[1:even:2] += 4.0 / 3.0
        w[0] -= 1.0 / 3.0
        w[even] -= 1.0 / 3.0
    if tail:
        w[even:even + 4] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w * h
