"""Charts, sparse functional tensors, line elements and the tensor transformation law.

Index convention: a rank (U, L) component index is a flat tuple of U upper
indices followed by L lower indices, each 0-based in [0, D). Entries that are
not stored are zero.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .scalars import Scalar, WIDTH, check_tag

ROLES = ("time", "space", "probability", "entropy", "information", "generic")
SYMMETRIES = ("none", "separately-symmetric", "fully-symmetric")


class ChartError(ValueError):
    """A point lies outside the chart or has the wrong dimension."""


class TensorError(ValueError):
    """Malformed tensor data or an invalid operation on a tensor."""


@dataclass(frozen=True)
class Axis:
    name: str
    role: str = "generic"
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise TensorError(f"unknown axis role {self.role!r}")
        if not self.name.isidentifier() or self.name in ex.CONSTANTS or self.name in ex.FUNCTIONS:
            raise TensorError(f"invalid axis name {self.name!r}")
        if not self.lo <= self.hi:
            raise TensorError(f"axis {self.name}: empty interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Chart:
    axes: tuple[Axis, ...]

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise TensorError(f"duplicate axis names in {names}")
        if not axes:
            raise TensorError("a chart needs at least one axis")

    @classmethod
    def simple(cls, names: Sequence[str], role: str = "generic") -> Chart:
        return cls(tuple(Axis(n, role) for n in names))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a.lo for a in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([a.hi for a in self.axes])

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def check(self, points) -> np.ndarray:
        """Return points as an (M, D) array or raise ChartError."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ChartError(f"expected points of dimension {self.dim}, got shape {np.shape(points)}")
        if not np.all(np.isfinite(pts)):
            raise ChartError("non-finite coordinates")
        bad = ~self.contains(pts)
        if np.any(bad):
            row = pts[np.argmax(bad)]
            raise ChartError(f"point {row.tolist()} lies outside the chart bounds")
        return pts

    def clip(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def sample(self, rng: np.random.Generator, n: int, spread: float = 1.0, margin: float = 0.05) -> np.ndarray:
        """Draw interior points: uniform on finite axes, offset draws on half lines."""
        out = np.empty((n, self.dim))
        for i, a in enumerate(self.axes):
            lo_f, hi_f = math.isfinite(a.lo), math.isfinite(a.hi)
            if lo_f and hi_f:
                w = a.hi - a.lo
                out[:, i] = rng.uniform(a.lo + margin * w, a.hi - margin * w, n)
            elif lo_f:
                out[:, i] = a.lo + margin + rng.uniform(0.0, 2.0 * spread, n)
            elif hi_f:
                out[:, i] = a.hi - margin - rng.uniform(0.0, 2.0 * spread, n)
            else:
                out[:, i] = rng.uniform(-spread, spread, n)
        return out

    def to_json(self) -> list[dict]:
        return [
            {"name": a.name, "role": a.role,
             "lo": a.lo if math.isfinite(a.lo) else None,
             "hi": a.hi if math.isfinite(a.hi) else None}
            for a in self.axes
        ]

    @classmethod
    def from_json(cls, obj: list[dict]) -> Chart:
        return cls(tuple(
            Axis(d["name"], d.get("role", "generic"),
                 -math.inf if d.get("lo") is None else float(d["lo"]),
                 math.inf if d.get("hi") is None else float(d["hi"]))
            for d in obj
        ))


def _freeze_components(components, rank: tuple[int, int], dim: int) -> dict[tuple[int, ...], ex.Expr]:
    items = components.items() if isinstance(components, Mapping) else components
    out: dict[tuple[int, ...], ex.Expr] = {}
    n = rank[0] + rank[1]
    for idx, e in items:
        key = tuple(int(i) for i in (idx if isinstance(idx, (tuple, list)) else (idx,)))
        if len(key) != n:
            raise TensorError(f"index {key} has {len(key)} entries, rank needs {n}")
        if any(i < 0 or i >= dim for i in key):
            raise TensorError(f"index {key} out of range for dimension {dim}")
        if key in out:
            raise TensorError(f"index {key} given twice")
        parsed = ex.parse(e)
        if isinstance(parsed, ex.Num) and parsed.value.is_zero():
            continue
        out[key] = parsed
    return out


@dataclass(frozen=True, eq=False)
class TensorField:
    """Sparse rank (U, L) tensor field over a chart with expression components."""

    rank: tuple[int, int]
    chart: Chart
    codomain: str
    components: Mapping[tuple[int, ...], ex.Expr]
    symmetry: str = "none"
    params: Mapping[str, ex.Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        rank = tuple(int(r) for r in self.rank)
        if len(rank) != 2 or min(rank) < 0 or sum(rank) < 1:
            raise TensorError(f"bad rank {self.rank}")
        object.__setattr__(self, "rank", rank)
        check_tag(self.codomain)
        if self.symmetry not in SYMMETRIES:
            raise TensorError(f"unknown symmetry {self.symmetry!r}")
        object.__setattr__(self, "components", _freeze_components(self.components, rank, self.chart.dim))
        params = {str(k): ex.parse(v) for k, v in dict(self.params).items()}
        for name in params:
            if not name.isidentifier() or name in self.chart.names or name in ex.CONSTANTS or name in ex.FUNCTIONS:
                raise TensorError(f"invalid parameter name {name!r}")
        object.__setattr__(self, "params", params)
        try:
            ex.param_order(params)
        except ex.ExprError as exc:
            raise TensorError(str(exc)) from exc
        known = set(self.chart.names) | set(params)
        unknown = ex.names_in(list(self.components.values()) + list(params.values())) - known
        if unknown:
            raise TensorError(f"unknown names in expressions: {sorted(unknown)}")

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def order(self) -> int:
        return self.rank[0] + self.rank[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorField):
            return NotImplemented
        return (self.rank == other.rank and self.chart == other.chart and self.codomain == other.codomain
                and self.symmetry == other.symmetry and dict(self.components) == dict(other.components)
                and dict(self.params) == dict(other.params))

    __hash__ = None  # type: ignore[assignment]

    def evaluator(self, points: np.ndarray) -> ex.Evaluator:
        coords = {name: points[:, i] for i, name in enumerate(self.chart.names)}
        return ex.Evaluator(coords, self.params)

    def evaluate(self, points) -> dict[tuple[int, ...], np.ndarray]:
        """Evaluate every stored component at points of shape (M, D).

        Returns a map index -> (M, width) float array in the codomain layout.
        """
        pts = self.chart.check(points)
        ev = self.evaluator(pts)
        try:
            return {idx: ex.to_components(ev.eval(e), self.codomain, len(pts)) for idx, e in self.components.items()}
        except ex.ExprError as exc:
            raise TensorError(str(exc)) from exc

    def dense(self, point) -> np.ndarray:
        """Dense component array of shape (D,)*order + (width,) at one point."""
        vals = self.evaluate(point)
        out = np.zeros((self.dim,) * self.order + (WIDTH[self.codomain],))
        for idx, v in vals.items():
            out[idx] = v[0]
        return out

    def with_params(self, **overrides) -> TensorField:
        params = dict(self.params)
        for k, v in overrides.items():
            if k not in params:
                raise TensorError(f"unknown parameter {k!r}")
            params[k] = ex.parse(v)
        return replace(self, params=params)

    def inlined(self) -> TensorField:
        """Same field with every parameter expanded into the components."""
        comps = {idx: ex.inline_params(e, self.params) for idx, e in self.components.items()}
        return replace(self, components=comps, params={})

    def symmetrized(self) -> TensorField:
        """Average over index permutations (within the upper and lower groups)."""
        U, L = self.rank
        acc: dict[tuple[int, ...], list[ex.Expr]] = {}
        perms_u = list(itertools.permutations(range(U)))
        perms_l = list(itertools.permutations(range(L)))
        count = len(perms_u) * len(perms_l)
        for idx, e in self.components.items():
            up, lo = idx[:U], idx[U:]
            for pu in perms_u:
                for pl in perms_l:
                    key = tuple(up[i] for i in pu) + tuple(lo[i] for i in pl)
                    acc.setdefault(key, []).append(e)
        comps = {}
        for key, terms in acc.items():
            total = functools.reduce(ex.add, terms)
            comps[key] = ex.div(total, ex.num(float(count))) if count > 1 else total
        sym = "fully-symmetric" if U == 0 or L == 0 else "separately-symmetric"
        return replace(self, components=comps, symmetry=sym)

    def to_json(self) -> dict:
        comps = [{"idx": list(idx), "expr": ex.to_string(e)} for idx, e in sorted(self.components.items())]
        return {
            "rank": list(self.rank),
            "dim": self.dim,
            "codomain": self.codomain,
            "components": comps,
            "symmetry": self.symmetry,
            "params": {k: ex.to_string(v) for k, v in sorted(self.params.items())},
            "axes": self.chart.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> TensorField:
        dim = int(obj["dim"])
        if "axes" in obj and obj["axes"] is not None:
            chart = Chart.from_json(obj["axes"])
            if chart.dim != dim:
                raise TensorError("axes do not match dim")
        else:
            chart = Chart.simple([f"x{i}" for i in range(dim)])
        comps = [(tuple(c["idx"]), c["expr"]) for c in obj["components"]]
        return cls(tuple(obj["rank"]), chart, obj.get("codomain", "real"), comps,
                   obj.get("symmetry", "none"), dict(obj.get("params", {})))


@dataclass(frozen=True, eq=False)
class MetricSpec:
    tensor: TensorField
    aux_lowering: TensorField | None = None
    name: str = ""
    notes: str = ""

    def __post_init__(self) -> None:
        U = self.tensor.rank[0]
        if U > 0 and self.aux_lowering is None:
            raise TensorError("a field with upper indices needs aux_lowering")
        if self.aux_lowering is not None:
            aux = self.aux_lowering
            if aux.rank != (0, 2) or aux.codomain != "real" or aux.chart != self.tensor.chart:
                raise TensorError("aux_lowering must be a real (0,2) field on the same chart")
            if aux.symmetry != "fully-symmetric":
                raise TensorError("aux_lowering must be declared fully-symmetric")

    @property
    def chart(self) -> Chart:
        return self.tensor.chart

    @property
    def rank(self) -> tuple[int, int]:
        return self.tensor.rank

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "notes": self.notes,
            "tensor": self.tensor.to_json(),
            "aux_lowering": None if self.aux_lowering is None else self.aux_lowering.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> MetricSpec:
        if "tensor" not in obj:
            return cls(TensorField.from_json(obj))
        aux = obj.get("aux_lowering")
        return cls(TensorField.from_json(obj["tensor"]),
                   None if aux is None else TensorField.from_json(aux),
                   obj.get("name", ""), obj.get("notes", ""))


def as_metric(m) -> MetricSpec:
    if isinstance(m, MetricSpec):
        return m
    if isinstance(m, TensorField):
        return MetricSpec(m)
    raise TypeError(f"expected MetricSpec or TensorField, got {type(m).__name__}")


# ------------------------------------------------------------ operations


def _scalar_from_row(row: np.ndarray, tag: str) -> Scalar:
    return Scalar(tag, tuple(float(x) for x in row))


def eval_component(t: TensorField, idx: Sequence[int], p) -> Scalar:
    """Value of one component at one point (zero when not stored)."""
    key = tuple(int(i) for i in idx)
    if len(key) != t.order or any(i < 0 or i >= t.dim for i in key):
        raise TensorError(f"malformed index {tuple(idx)} for rank {t.rank} in dimension {t.dim}")
    pts = t.chart.check(p)
    if len(pts) != 1:
        raise ChartError("eval_component takes a single point")
    e = t.components.get(key)
    if e is None:
        return Scalar(t.codomain, (0.0,) * WIDTH[t.codomain])
    ev = t.evaluator(pts)
    try:
        row = ex.to_components(ev.eval(e), t.codomain, 1)[0]
    except ex.ExprError as exc:
        raise TensorError(str(exc)) from exc
    return _scalar_from_row(row, t.codomain)


def lowered(m: MetricSpec, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Batch lowering v_i = g_ij v^j with the auxiliary metric."""
    if m.aux_lowering is None:
        raise TensorError("lowering needs aux_lowering")
    vals = m.aux_lowering.evaluate(points)
    out = np.zeros_like(vectors, dtype=float)
    for (i, j), v in vals.items():
        out[:, i] += v[:, 0] * vectors[:, j]
    return out


def lower_vector(m, p, v) -> np.ndarray:
    """Lower one vector with the metric's auxiliary (0,2) tensor.

    A bare (0,2) real TensorField is accepted and used directly.
    """
    if isinstance(m, TensorField):
        m = MetricSpec(m, m)
    pts = m.chart.check(p)
    vec = np.asarray(v, dtype=float).reshape(1, -1)
    if vec.shape[1] != m.chart.dim:
        raise TensorError("vector dimension does not match the chart")
    return lowered(m, pts, vec)[0]


class LineElementKernel:
    """Precompiled contraction F_{idx} w_{i1}..w_{iU} dc_{j1}..dc_{jL} for a metric.

    Constant components are evaluated once; the rest are evaluated per call.
    Inputs are not bounds-checked; callers validate points first.
    """

    def __init__(self, m: MetricSpec) -> None:
        t = m.tensor
        self.metric = m
        self.width = WIDTH[t.codomain]
        self.upper = t.rank[0]
        keys = sorted(t.components)
        self.idx = np.array(keys, dtype=int).reshape(len(keys), t.order)
        self.const = np.zeros((len(keys), self.width))
        self.varying: list[tuple[int, ex.Expr]] = []
        for n, key in enumerate(keys):
            e = t.components[key]
            if ex.free_names(ex.inline_params(e, t.params)):
                self.varying.append((n, e))
            else:
                self.const[n] = ex.to_components(ex.evaluate(e, {}, t.params), t.codomain, 1)[0]
        self.aux = None if m.aux_lowering is None else LineElementKernel._lowering(m.aux_lowering)

    @staticmethod
    def _lowering(aux: TensorField):
        keys = sorted(aux.components)
        return aux, np.array(keys, dtype=int).reshape(len(keys), 2)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Component values shaped (M, nnz, width)."""
        vals = np.broadcast_to(self.const, (len(points),) + self.const.shape)
        if self.varying:
            vals = vals.copy()
            t = self.metric.tensor
            ev = t.evaluator(points)
            try:
                for n, e in self.varying:
                    vals[:, n] = ex.to_components(ev.eval(e), t.codomain, len(points))
            except ex.ExprError as exc:
                raise TensorError(str(exc)) from exc
        return vals

    def __call__(self, points: np.ndarray, dc: np.ndarray) -> np.ndarray:
        m = len(points)
        if len(self.idx) == 0:
            return np.zeros((m, self.width))
        vals = self.values(points)
        U = self.upper
        if U:
            if self.aux is None:
                raise TensorError("lowering needs aux_lowering")
            aux, aidx = self.aux
            avals = LineElementKernel._aux_values(aux, points)
            w = np.zeros_like(dc)
            for (i, j), v in zip(map(tuple, aidx), avals):
                w[:, i] += v * dc[:, j]
            factors = np.concatenate([w[:, self.idx[:, :U]], dc[:, self.idx[:, U:]]], axis=2)
        else:
            factors = dc[:, self.idx]
        prod = np.prod(factors, axis=2)  # (M, nnz)
        return np.einsum("mn,mnw->mw", prod, vals)

    @staticmethod
    def _aux_values(aux: TensorField, points: np.ndarray) -> list[np.ndarray]:
        ev = aux.evaluator(points)
        out = []
        for key in sorted(aux.components):
            out.append(ex.to_components(ev.eval(aux.components[key]), "real", len(points))[:, 0])
        return out


def kernel(m) -> LineElementKernel:
    """Cached line-element kernel of a metric."""
    m = as_metric(m)
    k = m.__dict__.get("_kernel")
    if k is None:
        k = LineElementKernel(m)
        object.__setattr__(m, "_kernel", k)
    return k


def line_element_batch(m, points, displacements) -> np.ndarray:
    """Line element values at M points, returned as an (M, width) array."""
    m = as_metric(m)
    pts = m.chart.check(points)
    dc = np.asarray(displacements, dtype=float)
    if dc.ndim == 1:
        dc = dc[None, :]
    if dc.shape != pts.shape:
        raise TensorError(f"displacements shape {dc.shape} does not match points {pts.shape}")
    return kernel(m)(pts, dc)


def line_element(m, p, dc) -> Scalar:
    """Line element sum F_{...} dc^... dc_... at one point."""
    m = as_metric(m)
    row = line_element_batch(m, p, dc)[0]
    return _scalar_from_row(row, m.tensor.codomain)


def reduce_to_bilinear(t: TensorField, fields: Sequence[Sequence]) -> TensorField:
    """Contract a (0, L) tensor with L - 2 vector fields into a (0, 2) field.

    ``fields`` holds L - 2 vector fields, each a sequence of D expressions.
    g_ij = m_{i j k1 ... k_{L-2}} v1^{k1} ... v_{L-2}^{k_{L-2}}.
    """
    U, L = t.rank
    if U != 0:
        raise TensorError("reduce_to_bilinear needs a covariant (0, L) tensor")
    if L < 2:
        raise TensorError("reduce_to_bilinear needs rank L >= 2")
    if len(fields) != L - 2:
        raise TensorError(f"need {L - 2} vector fields, got {len(fields)}")
    vecs = []
    for f in fields:
        comps = [ex.parse(c) for c in f]
        if len(comps) != t.dim:
            raise TensorError("vector field dimension does not match the chart")
        vecs.append(comps)
    acc: dict[tuple[int, int], list[ex.Expr]] = {}
    for idx, e in t.components.items():
        term = e
        for vec, k in zip(vecs, idx[2:]):
            term = ex.s_times(term, vec[k])
        if isinstance(term, ex.Num) and term.value.is_zero():
            continue
        acc.setdefault(idx[:2], []).append(term)
    comps = {key: functools.reduce(ex.add, terms) for key, terms in acc.items()}
    return TensorField((0, 2), t.chart, t.codomain, comps, "none", t.params)


# ------------------------------------------------------ transformation law


class ComponentTable:
    """Components of a tensor at one point in new coordinates.

    Built either from a dense array or as a sum of rank-one terms (one per
    stored component of the source tensor). The dense array of shape
    (D,)*(U+L) + (width,) is formed on first access.
    """

    def __init__(self, rank: tuple[int, int], codomain: str, values: np.ndarray | None = None,
                 terms: list[tuple[list[np.ndarray], np.ndarray]] | None = None) -> None:
        if (values is None) == (terms is None):
            raise TensorError("give either dense values or rank-one terms")
        self.rank = tuple(rank)
        self.codomain = codomain
        self.terms = terms
        self._values = values

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = sum(
                (functools.reduce(np.multiply.outer, f)[..., None] * v for f, v in self.terms),
                np.zeros(()),
            )
        return self._values

    def component(self, idx: Sequence[int]) -> Scalar:
        return _scalar_from_row(self.values[tuple(idx)], self.codomain)


def transform_tensor(t: TensorField, chart_map, p_new) -> ComponentTable:
    """Components of ``t`` in the coordinates defined by ``chart_map``.

    Upper slots pick up forward-Jacobian factors and lower slots inverse-
    Jacobian factors; the old components are taken at the preimage point.
    """
    p_new = np.asarray(p_new, dtype=float).reshape(1, -1)
    if p_new.shape[1] != t.dim or chart_map.dim != t.dim:
        raise TensorError("map dimension does not match the tensor")
    p_old = chart_map.inverse(p_new)
    vals = t.evaluate(p_old)
    j_fwd = chart_map.jacobian(p_old)[0]          # d new / d old
    j_inv = chart_map.jacobian_inverse(p_new)[0]  # d old / d new
    U = t.rank[0]
    terms = []
    for idx, v in sorted(vals.items()):
        factors = [j_fwd[:, i] if a < U else j_inv[i, :] for a, i in enumerate(idx)]
        terms.append((factors, v[0]))
    if not terms:
        zeros = np.zeros((t.dim,) * t.order + (WIDTH[t.codomain],))
        return ComponentTable(t.rank, t.codomain, zeros)
    return ComponentTable(t.rank, t.codomain, terms=terms)


def transform_metric(m, chart_map, p_new) -> tuple[ComponentTable, ComponentTable | None]:
    m = as_metric(m)
    aux = None if m.aux_lowering is None else transform_tensor(m.aux_lowering, chart_map, p_new)
    return transform_tensor(m.tensor, chart_map, p_new), aux


def contract_table(table: ComponentTable, dc, aux: ComponentTable | None = None) -> Scalar:
    """Line element of a dense component table for displacement ``dc``."""
    dc = np.asarray(dc, dtype=float)
    U, L = table.rank
    if U:
        if aux is None:
            raise TensorError("lowering needs an auxiliary table")
        w = aux.values[..., 0] @ dc
    if table.terms is not None:
        total = np.zeros(WIDTH[table.codomain])
        for factors, v in table.terms:
            total = total + math.prod(float(f @ (w if a < U else dc)) for a, f in enumerate(factors)) * v
        return _scalar_from_row(total, table.codomain)
    res = table.values
    for a in range(U + L):
        vec = w if a < U else dc
        res = np.tensordot(vec, res, axes=([0], [0]))
    return _scalar_from_row(res, table.codomain)


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
