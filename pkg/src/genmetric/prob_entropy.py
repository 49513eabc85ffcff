"""Gaussian factors, potentials derived from them, Shannon information and entropy,
and the substitution of an entropy coordinate for a time coordinate.

All logarithms are natural; ``LOG_BASE`` records this in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from ._special import gaussian, simpson_weights
from .tensor import Axis, Chart, MetricSpec, TensorField, as_metric

LOG_BASE = "e"
MODES = ("as-printed", "chain-rule")


class EntropyError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianParams:
    mean: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.sigma)):
            raise EntropyError("mean and sigma must be finite")
        if self.sigma <= 0:
            raise EntropyError("sigma must be positive")


def gaussian_factor(x, g: GaussianParams):
    """Normal density with the given mean and standard deviation."""
    out = gaussian(np.asarray(x, dtype=float), g.mean, g.sigma)
    return float(out) if np.ndim(out) == 0 else out


def potential_from_gaussian(g: GaussianParams, x, sign: int = 1):
    """sign * (1/2) * ln(gaussian_factor(x, g)); the log is taken analytically."""
    if sign not in (1, -1):
        raise EntropyError("sign must be +1 or -1")
    z = (np.asarray(x, dtype=float) - g.mean) / g.sigma
    log_g = -0.5 * z * z - math.log(math.sqrt(2.0 * math.pi) * g.sigma)
    out = sign * 0.5 * log_g
    return float(out) if np.ndim(out) == 0 else out


def shannon_information(p: float) -> float:
    """-ln p for a probability p in (0, 1]."""
    p = float(p)
    if not (0.0 < p <= 1.0):
        raise EntropyError(f"probability must lie in (0, 1], got {p}")
    return -math.log(p)


@dataclass(frozen=True)
class DensitySpec:
    """A density on one or more closed intervals, sampled at ``nodes`` points per interval.

    ``density`` is an expression in ``variable`` or a vectorized callable.
    """

    density: object
    domain: Sequence[tuple[float, float]]
    nodes: int = 10001
    variable: str = "x"
    mass_tol: float = 1e-6

    def __post_init__(self) -> None:
        dom = tuple((float(a), float(b)) for a, b in self.domain)
        if not dom:
            raise EntropyError("the domain needs at least one interval")
        for a, b in dom:
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise EntropyError(f"bad interval [{a}, {b}]")
        object.__setattr__(self, "domain", dom)
        if self.nodes < 3:
            raise EntropyError("need at least three nodes")
        if not callable(self.density):
            e = ex.parse(self.density)
            unknown = ex.free_names(e) - {self.variable}
            if unknown:
                raise EntropyError(f"unknown names in density: {sorted(unknown)}")
            object.__setattr__(self, "density", e)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if callable(self.density):
            val = self.density(x)
        else:
            val = ex.evaluate(self.density, {self.variable: x})
        val = np.asarray(val)
        if np.iscomplexobj(val):
            raise EntropyError("density must be real")
        return np.broadcast_to(val.astype(float), np.shape(x)).copy()


@dataclass(frozen=True)
class EntropyResult:
    value: float
    mass: float
    nodes: int
    intervals: int
    base: str = LOG_BASE

    def to_json(self) -> dict:
        return {"entropy": self.value, "mass": self.mass, "nodes": self.nodes,
                "intervals": self.intervals, "log_base": self.base, "rule": "composite simpson"}


def integrate_entropy(d: DensitySpec) -> EntropyResult:
    """-int P ln P by composite Simpson with 0 ln 0 = 0, plus the total mass."""
    value = mass = 0.0
    for a, b in d.domain:
        x = np.linspace(a, b, d.nodes)
        w = simpson_weights(d.nodes - 1, (b - a) / (d.nodes - 1))
        p = d(x)
        if not np.all(np.isfinite(p)):
            raise EntropyError(f"non-finite density on [{a}, {b}]")
        if np.any(p < 0):
            k = int(np.argmin(p))
            raise EntropyError(f"negative density {p[k]:.3e} at {x[k]}")
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(p > 0, -p * np.log(p), 0.0)
        value += float(w @ f)
        mass += float(w @ p)
    if abs(mass - 1.0) > d.mass_tol:
        raise EntropyError(f"density integrates to {mass:.9g}, not 1 within {d.mass_tol:g}")
    return EntropyResult(value, mass, d.nodes, len(d.domain))


def shannon_entropy(d: DensitySpec) -> float:
    return integrate_entropy(d).value


# ------------------------------------------------------------- entropy coordinate


def _time_axis(chart: Chart, name: str | None) -> int:
    if name is not None:
        if name not in chart.names:
            raise EntropyError(f"no axis named {name!r}")
        return chart.names.index(name)
    for i, a in enumerate(chart.axes):
        if a.role == "time":
            return i
    raise EntropyError("the chart has no time axis")


def _probe_range(axis: Axis) -> tuple[float, float]:
    lo = axis.lo if math.isfinite(axis.lo) else (axis.hi - 2.0 if math.isfinite(axis.hi) else -1.0)
    hi = axis.hi if math.isfinite(axis.hi) else lo + 2.0
    return lo, hi


def entropy_substitute(m, S, mode: str = "as-printed", time_axis: str | None = None,
                       new_name: str = "S", samples: int = 256, bracket: tuple[float, float] | None = None,
                       params=None) -> MetricSpec:
    """Replace the time coordinate by an entropy coordinate S(time).

    ``as-printed`` multiplies each component by (S')^n, where n counts the
    time indices of the component. ``chain-rule`` divides by (S')^n instead,
    so the line element is unchanged once dS = S' dt. Remaining occurrences
    of the time coordinate are rewritten through the inverse of S: exactly
    when S is affine, otherwise by bisection on ``bracket`` (default: the
    time axis bounds, or a window around the origin on unbounded axes).
    """
    if mode not in MODES:
        raise EntropyError(f"mode must be one of {MODES}")
    m = as_metric(m)
    t = m.tensor
    if t.rank[0] != 0:
        raise EntropyError("entropy substitution is defined for (0,L) fields")
    chart = t.chart
    k = _time_axis(chart, time_axis)
    tname = chart.names[k]
    if new_name in chart.names and new_name != tname:
        raise EntropyError(f"coordinate name {new_name!r} already in use")
    extra = {str(a): ex.parse(b) for a, b in dict(params or {}).items()}
    all_params = {**t.params, **extra}
    s_expr = ex.inline_params(ex.parse(S), extra)
    unknown = ex.free_names(s_expr) - {tname}
    if unknown:
        raise EntropyError(f"S may only depend on {tname!r}, got {sorted(unknown)}")
    ds = ex.diff(s_expr, tname)

    lo, hi = _probe_range(chart.axes[k])
    grid = np.linspace(lo, hi, samples)
    slope = np.real(np.broadcast_to(np.asarray(ex.evaluate(ds, {tname: grid})), grid.shape))
    if not np.all(np.isfinite(slope)) or not (np.all(slope > 0) or np.all(slope < 0)):
        raise EntropyError("S is not strictly monotone on the time axis (S' changes sign or vanishes)")

    s_var = ex.Var(new_name)
    if ex.is_constant(ds):
        s0 = ex.substitute(s_expr, {tname: ex.num(0.0)})
        time_of_s = ex.s_over(ex.s_minus(s_var, s0), ds)
    else:
        b_lo, b_hi = bracket if bracket is not None else (lo, hi)
        f_u = ex.substitute(s_expr, {tname: ex.Var(ex.INVERSE_VAR)})
        time_of_s = ex.Call("inverse", (f_u, s_var, ex.num(float(b_lo)), ex.num(float(b_hi))))
    rewrite = {tname: time_of_s}

    comps = {}
    for idx, e in t.components.items():
        n = idx.count(k)
        if n:
            factor = ex.s_pow(ds, ex.num(n))
            e = ex.s_times(e, factor) if mode == "as-printed" else ex.s_over(e, factor)
        comps[idx] = ex.substitute(e, rewrite)
    new_params = {name: ex.substitute(v, rewrite) for name, v in all_params.items()}

    s_lo, s_hi = _mapped_bounds(s_expr, tname, chart.axes[k], bool(slope[0] > 0))
    axes = list(chart.axes)
    axes[k] = Axis(new_name, "entropy", s_lo, s_hi)
    new_t = TensorField(t.rank, Chart(tuple(axes)), t.codomain, comps, t.symmetry, new_params)
    aux = new_t if m.aux_lowering is m.tensor else None
    return MetricSpec(new_t, aux, f"{m.name}_entropy" if m.name else "entropy", f"time replaced by {new_name} ({mode})")


def _mapped_bounds(s_expr, tname: str, axis: Axis, increasing: bool) -> tuple[float, float]:
    def at(x: float) -> float:
        if not math.isfinite(x):
            return x if increasing else -x
        return float(np.real(ex.evaluate(s_expr, {tname: np.array([x])}))[0])

    a, b = at(axis.lo), at(axis.hi)
    return (a, b) if a <= b else (b, a)

