"""Metrics built from a potential (Hessian structures) and from warped products."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr as ex
from .catalog import build
from .tensor import Axis, Chart, ComponentTable, MetricSpec, TensorError, TensorField

ORDERS = (2, 3, 4)


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """A real scalar function phi on a chart, given as an expression."""

    phi: ex.Expr
    chart: Chart
    params: Mapping[str, ex.Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", ex.parse(self.phi))
        object.__setattr__(self, "params", {k: ex.parse(v) for k, v in dict(self.params).items()})
        unknown = ex.free_names(ex.inline_params(self.phi, self.params)) - set(self.chart.names)
        if unknown:
            raise ConstructionError(f"unknown names in potential: {sorted(unknown)}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ev = ex.Evaluator({n: pts[:, i] for i, n in enumerate(self.chart.names)}, self.params)
        val = np.asarray(ev.eval(self.phi))
        if np.iscomplexobj(val) or isinstance(val, ex.QArray):
            raise ConstructionError("the potential must be real valued")
        return np.broadcast_to(val.astype(float), (len(pts),)).copy()


@dataclass(frozen=True)
class HessianResult:
    table: ComponentTable
    asymmetry: float  # largest difference between permuted raw estimates
    step: np.ndarray

    def component(self, idx) -> float:
        return float(self.table.values[tuple(idx)][0])


def default_step(order: int, point) -> np.ndarray:
    """eps^(1 / (order + 2)) scaled by 1 + |coordinate|."""
    return np.finfo(float).eps ** (1.0 / (order + 2)) * (1.0 + np.abs(np.asarray(point, dtype=float)))


def _nested_difference(phi: Potential, x: np.ndarray, idx: tuple[int, ...], h: np.ndarray) -> float:
    """Central difference in idx[0] of the central difference in idx[1] of ... phi."""
    if not idx:
        return float(phi(x[None, :])[0])
    i, rest = idx[0], idx[1:]
    up, dn = x.copy(), x.copy()
    up[i] += h[i]
    dn[i] -= h[i]
    return (_nested_difference(phi, up, rest, h) - _nested_difference(phi, dn, rest, h)) / (2.0 * h[i])


def hessian_metric(phi: Potential, order: int, point, fd_step=None) -> HessianResult:
    """All order-``order`` partial derivatives of phi at a point by nested central differences.

    Each ordered index tuple is estimated separately; the output is the
    average over permutations, and the largest spread among permutations
    before averaging is reported as the asymmetry.
    """
    if order not in ORDERS:
        raise ConstructionError(f"order must be one of {ORDERS}")
    x = np.asarray(point, dtype=float).reshape(-1)
    dim = phi.chart.dim
    if len(x) != dim:
        raise ConstructionError("point dimension does not match the chart")
    if fd_step is None:
        h = default_step(order, x)
    else:
        h = np.broadcast_to(np.asarray(fd_step, dtype=float), (dim,)).copy()
        if np.any(h <= 0):
            raise ConstructionError("fd_step must be positive")
    raw = np.zeros((dim,) * order)
    for idx in itertools.product(range(dim), repeat=order):
        raw[idx] = _nested_difference(phi, x, idx, h)
    if not np.all(np.isfinite(raw)):
        raise ConstructionError("non-finite derivative estimate")
    perms = list(itertools.permutations(range(order)))
    stacked = np.stack([np.transpose(raw, p) for p in perms])
    sym = stacked.mean(axis=0)
    asym = float(np.max(stacked.max(axis=0) - stacked.min(axis=0)))
    return HessianResult(ComponentTable((0, order), "real", sym[..., None]), asym, h)


def hessian_field(phi: Potential, order: int) -> TensorField:
    """Exact Hessian-type field from symbolic differentiation of the potential."""
    if order not in ORDERS:
        raise ConstructionError(f"order must be one of {ORDERS}")
    names = phi.chart.names
    comps: dict[tuple[int, ...], ex.Expr] = {}
    cache: dict[tuple[int, ...], ex.Expr] = {(): phi.phi}
    for idx in itertools.combinations_with_replacement(range(phi.chart.dim), order):
        for k in range(1, order + 1):
            key = idx[:k]
            if key not in cache:
                cache[key] = ex.diff(cache[key[:-1]], names[key[-1]], phi.params)
        e = cache[idx]
        for perm in set(itertools.permutations(idx)):
            comps[perm] = e
    return TensorField((0, order), phi.chart, "real", comps, "fully-symmetric", phi.params)


# ------------------------------------------------------------- warped products


@dataclass(frozen=True)
class WarpSpec:
    """Base and fiber metrics with a positive warping function on the base."""

    base: TensorField
    fiber: TensorField
    warp: ex.Expr
    params: Mapping[str, ex.Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "warp", ex.parse(self.warp))
        object.__setattr__(self, "params", {k: ex.parse(v) for k, v in dict(self.params).items()})
        for name, g in (("base", self.base), ("fiber", self.fiber)):
            if g.rank != (0, 2) or g.codomain != "real":
                raise ConstructionError(f"{name} must be a real (0,2) field")
            if g.symmetry != "fully-symmetric":
                raise ConstructionError(f"{name} must be declared fully-symmetric")
        clash = set(self.base.chart.names) & set(self.fiber.chart.names)
        if clash:
            raise ConstructionError(f"base and fiber share coordinate names {sorted(clash)}")
        allowed = set(self.base.chart.names) | set(self.params) | set(self.base.params)
        unknown = ex.free_names(self.warp) - allowed
        if unknown:
            raise ConstructionError(f"the warp may only depend on base coordinates, got {sorted(unknown)}")

    def check_warp(self, samples: int = 64, seed: int = 0) -> None:
        """Raise if the warp is not positive at sampled base points."""
        rng = np.random.default_rng(seed)
        pts = self.base.chart.sample(rng, samples)
        params = {**self.base.params, **self.params}
        ev = ex.Evaluator({n: pts[:, i] for i, n in enumerate(self.base.chart.names)}, params)
        val = np.broadcast_to(np.asarray(ev.eval(self.warp)), (samples,))
        if np.iscomplexobj(val) or not np.all(val > 0):
            bad = int(np.argmin(np.real(val)))
            raise ConstructionError(f"warp is not positive at {pts[bad].tolist()}")


def warped_product(w: WarpSpec, samples: int = 64, seed: int = 0) -> MetricSpec:
    """Block metric g_B + f^2 g_F on the product chart, with no cross terms."""
    w.check_warp(samples, seed)
    params: dict[str, ex.Expr] = {}
    for source in (w.base.params, w.fiber.params, w.params):
        for k, v in source.items():
            if k in params and params[k] != v:
                raise ConstructionError(f"parameter {k!r} is defined twice with different values")
            params[k] = v
    nb = w.base.dim
    chart = Chart(w.base.chart.axes + w.fiber.chart.axes)
    comps = dict(w.base.components)
    unit = isinstance(w.warp, ex.Num) and w.warp.value.to_python() == 1
    factor = None if unit else ex.power(ex.Call("positive", (w.warp,)), ex.num(2))
    for (i, j), e in w.fiber.components.items():
        comps[(i + nb, j + nb)] = e if factor is None else ex.s_times(factor, e)
    try:
        t = TensorField((0, 2), chart, "real", comps, "fully-symmetric", params)
    except TensorError as exc:
        raise ConstructionError(str(exc)) from exc
    return MetricSpec(t, t, "warped", "base block plus squared warp times fiber block")


def flrw_warp_spec(a="a", c: float = 1.0, spatial_dim: int = 3) -> WarpSpec:
    """Base -c^2 dt^2 on the time line, flat fiber, warp a(t)."""
    base = TensorField((0, 2), Chart((Axis("t", "time"),)), "real", {(0, 0): f"-({c})^2"}, "fully-symmetric")
    names = [f"x{i}" for i in range(1, spatial_dim + 1)]
    fiber = TensorField((0, 2), Chart(tuple(Axis(n, "space") for n in names)), "real",
                        {(i, i): "1" for i in range(spatial_dim)}, "fully-symmetric")
    return WarpSpec(base, fiber, a)


def verify_flrw_warped(a, c: float = 1.0, samples: int = 100, seed: int = 0,
                       t_range: tuple[float, float] = (0.1, 2.0)) -> tuple[bool, float]:
    """Compare the catalog FLRW metric with the warped-product construction.

    Components are compared at sampled points with t in ``t_range`` (kept
    positive so that warps like t^2 stay positive). Returns whether they
    agree within 1e-14 and the largest deviation.
    """
    a = ex.to_string(ex.parse(a))
    direct = build("flrw", {"a": a, "c": c}).tensor
    warped = warped_product(flrw_warp_spec(a, c)).tensor
    rng = np.random.default_rng(seed)
    pts = direct.chart.sample(rng, samples)
    pts[:, 0] = rng.uniform(*t_range, samples)
    va, vb = direct.evaluate(pts), warped.evaluate(pts)
    worst = 0.0
    for idx in set(va) | set(vb):
        x = va.get(idx, np.zeros((samples, 1)))
        y = vb.get(idx, np.zeros((samples, 1)))
        worst = max(worst, float(np.max(np.abs(x - y))))
    return bool(worst < 1e-14), worst


def reference_sphere_fiber() -> TensorField:
    """Unit 2-sphere d(theta)^2 + sin(theta)^2 d(phi)^2 as a fiber block."""
    chart = Chart((Axis("theta", "space", 0.0, math.pi), Axis("phi", "space", 0.0, 2.0 * math.pi)))
    return TensorField((0, 2), chart, "real", {(0, 0): "1", (1, 1): "sin(theta)^2"}, "fully-symmetric")
