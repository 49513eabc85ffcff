"""Built-in metric families.

Each entry has a builder taking a parameter dictionary. Signs follow the axis
roles: time-like blocks enter with a minus sign, every other block with a
plus sign. Blocks described as "curved" use a radial coordinate plus angles,
with line element dr^2 + S_k(r)^2 dOmega^2 where
dOmega^2 = da1^2 + sin(a1)^2 da2^2 + sin(a1)^2 sin(a2)^2 da3^2 + ...
The last angle ranges over [0, 2 pi], the others over [0, pi].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping

from . import expr as ex
from .tensor import Axis, Chart, MetricSpec, TensorError, TensorField

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    default: object
    kind: str  # dim | curvature | positive | real | field | flag
    doc: str


@dataclass(frozen=True)
class Entry:
    id: str
    title: str
    line_element: str
    defaults_note: str
    params: dict[str, Param]
    builder: Callable[[dict], MetricSpec] = field(repr=False)


def _names(base: str, n: int) -> list[str]:
    return [base] if n == 1 else [f"{base}{i}" for i in range(1, n + 1)]


class _Blocks:
    """Accumulates axes and diagonal components block by block."""

    def __init__(self) -> None:
        self.axes: list[Axis] = []
        self.diag: dict[int, str] = {}

    def flat(self, base: str, n: int, role: str, factor: str, lo: float = -math.inf, hi: float = math.inf) -> list[str]:
        names = _names(base, n)
        for name in names:
            self.diag[len(self.axes)] = factor
            self.axes.append(Axis(name, role, lo, hi))
        return names

    def curved(self, radial: str, angle: str, n: int, role: str, factor: str, k: str, hi: float = math.inf) -> None:
        """Radial coordinate plus n - 1 angles; angular parts scale by S_k(radial)^2."""
        self.diag[len(self.axes)] = factor
        self.axes.append(Axis(radial, role, 0.0, hi))
        angles = [f"{angle}{i}" for i in range(1, n)]
        for j, name in enumerate(angles):
            parts = [f"({factor})", f"sk({radial}, {k})^2"]
            parts += [f"sin({angles[b]})^2" for b in range(j)]
            self.diag[len(self.axes)] = "*".join(parts)
            last = j == len(angles) - 1
            self.axes.append(Axis(name, role, 0.0, 2.0 * math.pi if last else math.pi))

    def metric(self, name: str, params: Mapping, notes: str, codomain: str = "real", order: int = 2) -> MetricSpec:
        chart = Chart(tuple(self.axes))
        comps = {(i,) * order: e for i, e in self.diag.items()}
        sym = "fully-symmetric"
        t = TensorField((0, order), chart, codomain, comps, sym, params)
        return MetricSpec(t, t if (order == 2 and codomain == "real") else None, name, notes)


def _fields(p: dict, *names: str) -> dict:
    return {n: p[n] for n in names}


# ------------------------------------------------------------- builders


def _euclidean(p):
    b = _Blocks()
    b.flat("x", p["D"], "space", "1")
    return b.metric("euclidean", {}, "flat Euclidean space in Cartesian coordinates")


def _minkowski(p):
    b = _Blocks()
    b.flat("t", 1, "time", "-c^2")
    b.flat("x", p["D_x"], "space", "1")
    return b.metric("minkowski", _fields(p, "c"), "flat Minkowski spacetime, signature (-,+,...,+)")


def _cubic2d(p):
    chart = Chart((Axis("x"), Axis("y")))
    t = TensorField((0, 3), chart, "real", {(0, 0, 0): "1", (1, 1, 1): "1"}, "fully-symmetric")
    return MetricSpec(t, None, "cubic2d", "ds^3 = dx^3 + dy^3")


def _complex_cubic3d(p):
    chart = Chart((Axis("x"), Axis("y"), Axis("z")))
    t = TensorField((0, 3), chart, "complex", {(0, 0, 0): "-1i", (1, 1, 1): "1", (2, 2, 2): "1"}, "fully-symmetric")
    return MetricSpec(t, None, "complex_cubic3d", "ds^3 = -i dx^3 + dy^3 + dz^3")


def _functional7d(p):
    b = _Blocks()
    b.flat("tau", 1, "time", "-1i*a^7")
    b.flat("t", 1, "time", "a^7*b^7")
    b.flat("x", 5, "space", "a^7*f^7")
    return b.metric("functional7d", _fields(p, "a", "b", "f", "k"),
                    "complex seventh-order line element", codomain="complex", order=7)


def _flrw(p):
    b = _Blocks()
    b.flat("t", 1, "time", "-c^2")
    b.flat("x", 3, "space", "a^2")
    return b.metric("flrw", _fields(p, "a", "c"), "spatially flat FLRW with scale factor a(t)")


def _perturbed_ads(p):
    b = _Blocks()
    b.curved("tau", "phi", p["D_tau"], "time", "-a^2*exp(2*Psi)", "k_tau")
    b.curved("r", "theta", p["D_r"], "space", "a^2*exp(-2*Phi)", "k")
    return b.metric("perturbed_ads", _fields(p, "a", "Psi", "Phi", "k", "k_tau"),
                    "perturbed spacetime with curved temporal and spatial blocks")


def _gpflrw(p):
    b = _Blocks()
    b.flat("t", 1, "time", "-gauss(Psi_g, Psi_mean, Psi_sigma)*c^2")
    b.flat("x", p["D_x"], "space", "a^2*gauss(Phi_g, Phi_mean, Phi_sigma)")
    names = ("a", "c", "Psi_g", "Psi_mean", "Psi_sigma", "Phi_g", "Phi_mean", "Phi_sigma")
    return b.metric("gpflrw", _fields(p, *names), "FLRW with Gaussian factors in place of the exponentials")


def _epflrw(p):
    b = _Blocks()
    b.flat("t", 1, "time", "-exp(2*Psi)*c^2")
    b.flat("x", p["D_x"], "space", "a^2*exp(-2*Phi)")
    b.flat("P", p["D_P"], "probability", "1", 0.0, 1.0)
    return b.metric("epflrw", _fields(p, "a", "c", "Psi", "Phi"),
                    "perturbed FLRW extended by Euclidean probability axes")


def _hipest(p):
    b = _Blocks()
    factor = "a^2*P_tau^2"
    b.flat("P", p["D_P"], "probability", factor, 0.0, 1.0)
    b.flat("tau", p["D_tau"], "time", "-" + factor)
    b.flat("x", p["D_x"], "space", factor)
    return b.metric("hipest", _fields(p, "a", "P_tau"),
                    "probability, time and space blocks sharing the factor a^2 P^2")


def _fscpst(p):
    b = _Blocks()
    b.curved("P", "chi", p["D_P"], "probability", "a^2*exp(2*Y)", "k_P", hi=1.0)
    b.curved("tau", "phi", p["D_tau"], "time", "-a^2*exp(2*Psi)", "k_tau")
    b.curved("r", "theta", p["D_r"], "space", "a^2*exp(-2*Phi)", "k")
    return b.metric("fscpst", _fields(p, "a", "Y", "Psi", "Phi", "k_P", "k_tau", "k"),
                    "curved probability, time and space blocks")


def _gravity_coupled(name: str, weight: str):
    def build(p):
        b = _Blocks()
        b.flat("tau", 1, "time", f"-{weight}*a^2*exp(2*Psi)")
        b.flat("x", p["D_x"], "space", f"{weight}*a^2*exp(-2*Phi)")
        return b.metric(name, _fields(p, weight, "a", "Psi", "Phi"),
                        f"perturbed spacetime weighted by the probability factor {weight}")
    return build


def _entropic_replacing(p):
    b = _Blocks()
    if p["chain_rule"]:
        factor = "-a^2*exp(2*Psi)/grad_S^2"
    else:
        factor = "-a^2*exp(2*Psi)*grad_S^2"
    b.flat("S", p["D_S"], "entropy", factor)
    b.curved("r", "theta", p["D_r"], "space", "a^2*exp(-2*Phi)", "k")
    mode = "chain-rule" if p["chain_rule"] else "as-printed"
    return b.metric("entropic_replacing", _fields(p, "a", "Psi", "Phi", "grad_S", "k"),
                    f"time replaced by entropy; gradient factor applied {mode}")


def _sest(p):
    b = _Blocks()
    b.curved("S", "eta", p["D_S"], "entropy", "a^2*exp(2*Xi)", "k_S")
    b.curved("tau", "phi", p["D_tau"], "time", "-a^2*exp(2*Psi)", "k_tau")
    b.curved("r", "theta", p["D_r"], "space", "a^2*exp(-2*Phi)", "k")
    return b.metric("sest", _fields(p, "a", "Xi", "Psi", "Phi", "k_S", "k_tau", "k"),
                    "entropy, time and space blocks")


def _gistm(p):
    b = _Blocks()
    b.flat("I", p["D_I"], "information", "a^2*exp(2*Lambda)", 0.0, math.inf)
    b.flat("tau", p["D_tau"], "time", "-a^2*exp(2*Psi)")
    b.flat("x", p["D_x"], "space", "a^2*exp(-2*Phi)")
    return b.metric("gistm", _fields(p, "a", "Lambda", "Psi", "Phi"),
                    "information, time and space blocks")


def _pestmmp(p):
    b = _Blocks()
    b.flat("P", p["D_P"], "probability", "a^2*exp(2*Theta)", 0.0, 1.0)
    b.flat("S", p["D_S"], "entropy", "a^2*exp(2*Xi)")
    b.flat("tau", p["D_tau"], "time", "-a^2*exp(2*Psi)")
    b.flat("x", p["D_x"], "space", "a^2*exp(-2*Phi)")
    return b.metric("pestmmp", _fields(p, "a", "Theta", "Xi", "Psi", "Phi"),
                    "probability, entropy, time and space blocks")


# ------------------------------------------------------------- registry

_A = Param("1", "field", "scale factor a as an expression in the chart coordinates")
_ZERO = "0"


def _pot(sym: str) -> Param:
    return Param(_ZERO, "field", f"perturbation potential {sym}")


def _k(doc: str) -> Param:
    return Param(0, "curvature", doc)


def _dim(default: int, doc: str) -> Param:
    return Param(default, "dim", doc)


_ENTRIES: list[Entry] = [
    Entry("euclidean", "Euclidean space", "ds^2 = sum_i dx_i^2", "flat",
          {"D": _dim(2, "dimension")}, _euclidean),
    Entry("minkowski", "Minkowski spacetime", "ds^2 = -c^2 dt^2 + sum_i dx_i^2", "flat",
          {"D_x": _dim(3, "spatial dimension"), "c": Param(1.0, "positive", "speed of light")}, _minkowski),
    Entry("cubic2d", "Cubic line element in two dimensions", "ds^3 = dx^3 + dy^3", "no parameters", {}, _cubic2d),
    Entry("complex_cubic3d", "Complex-valued cubic line element", "ds^3 = -i dx^3 + dy^3 + dz^3",
          "no parameters", {}, _complex_cubic3d),
    Entry("functional7d", "Seventh-order complex line element",
          "ds^7 = a^7 (-i dtau^7 + b^7 dt^7 + f^7 sum_i dx_i^7)",
          "a = b = 1 and f = S_k(x1) with k = 0",
          {"a": Param("1", "field", "scale factor, function of tau"),
           "b": Param("1", "field", "time weight, function of tau, t, x1"),
           "f": Param("sk(x1, k)", "field", "spatial weight"),
           "k": _k("curvature used by the default spatial weight")}, _functional7d),
    Entry("flrw", "Spatially flat FLRW", "ds^2 = -c^2 dt^2 + a(t)^2 sum_i dx_i^2", "a = 1 gives Minkowski",
          {"a": Param("1", "field", "scale factor a(t)"), "c": Param(1.0, "positive", "speed of light")}, _flrw),
    Entry("perturbed_ads", "Perturbed spacetime with curved blocks",
          "ds^2 = a^2 (-e^{2 Psi} dtau_block^2 + e^{-2 Phi} dr_block^2)",
          "Psi = Phi = 0, a = 1, k = 0 with (D_tau, D_r) = (1, 3) is Minkowski in spherical coordinates",
          {"D_tau": _dim(1, "temporal block dimension"), "D_r": _dim(3, "spatial block dimension"),
           "k": _k("spatial curvature"), "k_tau": _k("temporal curvature"), "a": _A,
           "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _perturbed_ads),
    Entry("gpflrw", "FLRW with Gaussian perturbation factors",
          "ds^2 = -G(Psi_g) c^2 dt^2 + a^2 G(Phi_g) sum_i dx_i^2",
          "fields at their means with sigma = 1/sqrt(2 pi) give FLRW",
          {"D_x": _dim(3, "spatial dimension"), "a": _A, "c": Param(1.0, "positive", "speed of light"),
           "Psi_g": Param("0", "field", "Gaussian-distributed temporal field"),
           "Psi_mean": Param(0.0, "real", "mean of the temporal field"),
           "Psi_sigma": Param(INV_SQRT_2PI, "positive", "width of the temporal field"),
           "Phi_g": Param("0", "field", "Gaussian-distributed spatial field"),
           "Phi_mean": Param(0.0, "real", "mean of the spatial field"),
           "Phi_sigma": Param(INV_SQRT_2PI, "positive", "width of the spatial field")}, _gpflrw),
    Entry("epflrw", "Perturbed FLRW with probability axes",
          "ds^2 = -e^{2 Psi} c^2 dt^2 + a^2 e^{-2 Phi} sum_i dx_i^2 + sum_a dP_a^2",
          "unperturbed FLRW block plus identity probability block",
          {"D_x": _dim(3, "spatial dimension"), "D_P": _dim(1, "probability dimension"), "a": _A,
           "c": Param(1.0, "positive", "speed of light"), "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _epflrw),
    Entry("hipest", "Probability, time and space with a common factor",
          "ds^2 = a^2 P^2 (sum dP_a^2 - sum dtau_a^2 + sum dx_a^2)",
          "a = P = 1 gives a flat pseudo-Euclidean space",
          {"D_P": _dim(1, "probability dimension"), "D_tau": _dim(1, "time dimension"),
           "D_x": _dim(3, "spatial dimension"), "a": _A,
           "P_tau": Param("1", "field", "probability profile entering the common factor")}, _hipest),
    Entry("fscpst", "Curved probability, time and space blocks",
          "ds^2 = a^2 (e^{2 Y} dP_block^2 - e^{2 Psi} dtau_block^2 + e^{-2 Phi} dr_block^2)",
          "all potentials zero, a = 1, flat curvatures",
          {"D_P": _dim(1, "probability block dimension"), "D_tau": _dim(1, "time block dimension"),
           "D_r": _dim(3, "spatial block dimension"), "k_P": _k("probability curvature"),
           "k_tau": _k("temporal curvature"), "k": _k("spatial curvature"), "a": _A,
           "Y": _pot("Y"), "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _fscpst),
    Entry("fssgcpst", "Probability-weighted perturbed spacetime (first form)",
          "ds^2 = O a^2 (-e^{2 Psi} dtau^2 + e^{-2 Phi} sum_i dx_i^2)", "O = a = 1 is Minkowski",
          {"D_x": _dim(3, "spatial dimension"), "O_Pf": Param("1", "field", "probability weight"), "a": _A,
           "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _gravity_coupled("fssgcpst", "O_Pf")),
    Entry("sssgcpst", "Probability-weighted perturbed spacetime (reduced second form)",
          "ds^2 = O a^2 (-e^{2 Psi} dtau^2 + e^{-2 Phi} sum_i dx_i^2)", "O = a = 1 is Minkowski",
          {"D_x": _dim(3, "spatial dimension"), "O_Ps": Param("1", "field", "probability weight"), "a": _A,
           "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _gravity_coupled("sssgcpst", "O_Ps")),
    Entry("entropic_replacing", "Time replaced by entropy",
          "ds^2 = a^2 (-e^{2 Psi} g dS_block^2 + e^{-2 Phi} dr_block^2), g = (dS/dtau)^2 or its inverse",
          "unit entropy gradient gives a flat pseudo-Euclidean metric",
          {"D_S": _dim(1, "entropy dimension"), "D_r": _dim(3, "spatial block dimension"),
           "k": _k("spatial curvature"), "a": _A, "Psi": _pot("Psi"), "Phi": _pot("Phi"),
           "grad_S": Param("1", "field", "entropy gradient along time"),
           "chain_rule": Param(False, "flag", "divide by the squared gradient instead of multiplying")},
          _entropic_replacing),
    Entry("sest", "Entropy, time and space blocks",
          "ds^2 = a^2 (e^{2 Xi} dS_block^2 - e^{2 Psi} dtau_block^2 + e^{-2 Phi} dr_block^2)",
          "all potentials zero, a = 1, flat curvatures",
          {"D_S": _dim(1, "entropy block dimension"), "D_tau": _dim(1, "time block dimension"),
           "D_r": _dim(3, "spatial block dimension"), "k_S": _k("entropy curvature"),
           "k_tau": _k("temporal curvature"), "k": _k("spatial curvature"), "a": _A,
           "Xi": _pot("Xi"), "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _sest),
    Entry("gistm", "Information, time and space blocks",
          "ds^2 = a^2 (e^{2 Lambda} dI^2 - e^{2 Psi} dtau^2 + e^{-2 Phi} dx^2)",
          "all potentials zero, a = 1",
          {"D_I": _dim(1, "information dimension"), "D_tau": _dim(1, "time dimension"),
           "D_x": _dim(3, "spatial dimension"), "a": _A, "Lambda": _pot("Lambda"),
           "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _gistm),
    Entry("pestmmp", "Probability, entropy, time and space blocks",
          "ds^2 = a^2 (e^{2 Theta} dP^2 + e^{2 Xi} dS^2 - e^{2 Psi} dtau^2 + e^{-2 Phi} dx^2)",
          "all potentials zero, a = 1",
          {"D_P": _dim(1, "probability dimension"), "D_S": _dim(1, "entropy dimension"),
           "D_tau": _dim(1, "time dimension"), "D_x": _dim(3, "spatial dimension"), "a": _A,
           "Theta": _pot("Theta"), "Xi": _pot("Xi"), "Psi": _pot("Psi"), "Phi": _pot("Phi")}, _pestmmp),
]

_BY_ID = {e.id: e for e in _ENTRIES}


def list_ids() -> list[str]:
    """Entry ids in their fixed order."""
    return [e.id for e in _ENTRIES]


def entry(id_: str) -> Entry:
    try:
        return _BY_ID[id_]
    except KeyError:
        raise CatalogError(f"unknown catalog id {id_!r}") from None


def _coerce(name: str, spec: Param, value):
    kind = spec.kind
    if kind == "dim":
        if isinstance(value, bool) or int(value) != value or int(value) < 1:
            raise CatalogError(f"{name} must be a positive integer")
        return int(value)
    if kind == "curvature":
        if isinstance(value, bool) or value not in (-1, 0, 1):
            raise CatalogError(f"{name} must be -1, 0 or 1")
        return ex.num(float(value))
    if kind in ("positive", "real"):
        try:
            x = float(value)
        except (TypeError, ValueError):
            raise CatalogError(f"{name} must be a number") from None
        if not math.isfinite(x) or (kind == "positive" and x <= 0):
            raise CatalogError(f"{name} must be {'positive' if kind == 'positive' else 'finite'}")
        return ex.num(x)
    if kind == "flag":
        if not isinstance(value, bool):
            raise CatalogError(f"{name} must be true or false")
        return value
    try:
        return ex.parse(value)
    except ex.ExprError as exc:
        raise CatalogError(f"{name}: {exc}") from exc


def build(id_: str, params: Mapping | None = None) -> MetricSpec:
    """Build an entry, overriding its defaults with ``params``."""
    e = entry(id_)
    given = dict(params or {})
    unknown = set(given) - set(e.params)
    if unknown:
        raise CatalogError(f"{id_} has no parameter(s) {sorted(unknown)}")
    values = {name: _coerce(name, spec, given.get(name, spec.default)) for name, spec in e.params.items()}
    try:
        return e.builder(values)
    except TensorError as exc:
        raise CatalogError(f"{id_}: {exc}") from exc


def catalog_document() -> dict:
    """Machine-readable description of every entry (the content of catalog.json)."""
    out = []
    for e in _ENTRIES:
        m = build(e.id)
        out.append({
            "id": e.id,
            "title": e.title,
            "line_element": e.line_element,
            "defaults": e.defaults_note,
            "rank": list(m.rank),
            "codomain": m.tensor.codomain,
            "axes": m.chart.to_json(),
            "params": {
                name: {"default": p.default, "kind": p.kind, "doc": p.doc}
                for name, p in e.params.items()
            },
        })
    return {"version": 1, "entries": out}


def shipped_catalog() -> dict:
    """The catalog.json file installed with the package."""
    text = resources.files(__package__).joinpath("catalog.json").read_text()
    return json.loads(text)
