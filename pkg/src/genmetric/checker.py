"""Sampled checks of the conditions a tensor field needs to induce a distance.

Every check is driven by a seed and returns verdicts whose witnesses can be
reproduced by re-running with that seed. Nothing here is a proof: sign
patterns, smoothness and invariance are probed at random points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .maps import NumericMap, random_map
from .scalars import WIDTH
from .solver import SolverConfig, curve_length, chord, distance
from .tensor import MetricSpec, TensorError, TensorField, as_metric, contract_table, kernel, transform_metric

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"
SYMMETRY_TOL = 1e-12
ZERO_TOL = 1e-12
INVARIANCE_TOL = {"analytic": 1e-8, "numeric": 1e-5}
PARTITION_TOL = 1e-12
DEFAULT_SAMPLES = 256
NON_ORDERED = "indeterminate: non-ordered codomain"


class CheckError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    status: str
    detail: str = ""
    value: float | None = None
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"status": self.status, "detail": self.detail, "value": self.value, "witness": self.witness}


def _points(chart, samples: int, rng: np.random.Generator) -> np.ndarray:
    return chart.sample(rng, samples)


# ------------------------------------------------------------- symmetry


def check_symmetry(t, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> Verdict:
    """Compare every stored component with its index permutations.

    Upper and lower index groups are permuted separately. Passes when the
    largest difference over the sampled points is below 1e-12.
    """
    t = t.tensor if isinstance(t, MetricSpec) else t
    rng = np.random.default_rng(seed)
    pts = _points(t.chart, samples, rng)
    vals = t.evaluate(pts)
    zero = np.zeros((samples, WIDTH[t.codomain]))
    U, L = t.rank
    worst, witness = 0.0, None
    for idx in sorted(t.components):
        up, lo = idx[:U], idx[U:]
        for pu in set(itertools.permutations(up)):
            for pl in set(itertools.permutations(lo)):
                other = pu + pl
                if other == idx:
                    continue
                a, b = vals[idx], vals.get(other, zero)
                diff = np.max(np.abs(a - b), axis=1)
                k = int(np.argmax(diff))
                if diff[k] > worst:
                    worst = float(diff[k])
                    witness = {"index": list(idx), "permuted": list(other), "point": pts[k].tolist(),
                               "values": [a[k].tolist(), b[k].tolist()]}
    if worst < SYMMETRY_TOL:
        return Verdict(PASS, "components agree under index permutations", worst)
    return Verdict(FAIL, "components differ under an index permutation", worst, witness)


# ------------------------------------------------------------- definiteness


@dataclass(frozen=True)
class Definiteness:
    classification: str
    degenerate: bool
    witnesses: dict = field(default_factory=dict)
    note: str = ""

    @property
    def label(self) -> str:
        if self.degenerate and self.classification == "indefinite":
            return "degenerate/indefinite"
        return self.classification

    def to_json(self) -> dict:
        return {"classification": self.classification, "degenerate": self.degenerate, "label": self.label,
                "witnesses": self.witnesses, "note": self.note}


def probe_vectors(dim: int) -> np.ndarray:
    """Coordinate directions and their pairwise sums and differences, both signs."""
    eye = np.eye(dim)
    rows = []
    for i in range(dim):
        rows += [eye[i], -eye[i]]
    for i, j in itertools.combinations(range(dim), 2):
        rows += [eye[i] + eye[j], -eye[i] - eye[j], eye[i] - eye[j], eye[j] - eye[i]]
    return np.array(rows)


def classify_definiteness(m, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> Definiteness:
    """Sign pattern of the line element over sampled points and directions.

    Directions are the structured probes from ``probe_vectors`` followed by
    ``samples`` random unit vectors. A value with magnitude below 1e-12 at a
    nonzero vector marks the field as degenerate.
    """
    m = as_metric(m)
    if m.tensor.codomain != "real":
        return Definiteness(NON_ORDERED, False, {}, f"{m.tensor.codomain} values have no sign")
    rng = np.random.default_rng(seed)
    dim, order = m.tensor.dim, sum(m.rank)
    pts = _points(m.chart, samples, rng)
    rand = rng.normal(size=(samples, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    vecs = np.concatenate([probe_vectors(dim), rand])
    P, V = len(pts), len(vecs)
    vals = kernel(m)(np.repeat(pts, V, axis=0), np.tile(vecs, (P, 1)))[:, 0].reshape(P, V)
    unit = vals / np.linalg.norm(vecs, axis=1)[None, :] ** order
    finite = np.isfinite(unit)
    if not finite.all():
        k = np.argwhere(~finite)[0]
        return Definiteness(INDETERMINATE, False, {"nonfinite": _witness(pts, vecs, vals, k)},
                            "non-finite line element at a sampled point")

    def pick(mask, key):
        if not mask.any():
            return None
        cand = np.argwhere(mask)
        best = cand[np.argmin(key[mask])] if key is not None else cand[0]
        return _witness(pts, vecs, vals, best)

    zero = np.abs(unit) < ZERO_TOL
    pos, neg = unit >= ZERO_TOL, unit <= -ZERO_TOL
    witnesses = {}
    for name, mask, key in (("positive", pos, -unit), ("negative", neg, unit), ("null", zero, None)):
        w = pick(mask, key)
        if w is not None:
            witnesses[name] = w
    has_pos, has_neg, has_zero = bool(pos.any()), bool(neg.any()), bool(zero.any())
    if has_pos and has_neg:
        label = "indefinite"
    elif has_pos:
        label = "positive-semidefinite" if has_zero else "positive-definite"
    elif has_neg:
        label = "negative-semidefinite" if has_zero else "negative-definite"
    else:
        label = "degenerate"
    return Definiteness(label, has_zero, witnesses)


def _witness(pts, vecs, vals, k) -> dict:
    i, j = int(k[0]), int(k[1])
    return {"point": pts[i].tolist(), "vector": vecs[j].tolist(), "value": float(vals[i, j])}


def eigen_classification(t: TensorField, point) -> str:
    """Definiteness of a real (0,2) field at one point from its symmetric part's eigenvalues."""
    if t.rank != (0, 2) or t.codomain != "real":
        raise CheckError("eigenvalue classification needs a real (0,2) field")
    a = t.dense(point)[..., 0]
    ev = np.linalg.eigvalsh(0.5 * (a + a.T))
    scale = max(1.0, float(np.max(np.abs(ev))))
    pos, neg = ev > ZERO_TOL * scale, ev < -ZERO_TOL * scale
    zero = ~(pos | neg)
    if pos.any() and neg.any():
        return "indefinite"
    if pos.any():
        return "positive-semidefinite" if zero.any() else "positive-definite"
    if neg.any():
        return "negative-semidefinite" if zero.any() else "negative-definite"
    return "degenerate"


# ------------------------------------------------------------- invariance


def _abs_contraction(m: MetricSpec, point: np.ndarray, dc: np.ndarray) -> float:
    """The line element with every term replaced by its magnitude; the scale of its rounding error."""
    t = m.tensor
    U = t.rank[0]
    w = None
    if U:
        aux = np.abs(m.aux_lowering.dense(point)[..., 0])
        w = aux @ np.abs(dc)
    total = 0.0
    for idx, v in t.evaluate(point).items():
        total += float(np.linalg.norm(v[0])) * math.prod(
            float(w[i]) if a < U else abs(float(dc[i])) for a, i in enumerate(idx))
    return total


def check_invariance(m, samples: int = 100, seed: int = 0, family: str = "analytic") -> Verdict:
    """Line element before and after random changes of coordinates.

    Each sample draws a map, a point and a displacement. The displacement is
    pushed forward with the Jacobian and contracted with the transformed
    components; the result must match the original line element relative to
    the sum of absolute term sizes.
    """
    if family not in INVARIANCE_TOL:
        raise CheckError(f"family must be one of {sorted(INVARIANCE_TOL)}")
    m = as_metric(m)
    rng = np.random.default_rng(seed)
    dim = m.tensor.dim
    worst, witness, skipped = 0.0, None, 0
    for s in range(samples):
        f = random_map(rng, dim)
        if family == "numeric":
            f = NumericMap(dim, f.forward, f.inverse)
        p_old = _points(m.chart, 1, rng)
        dc = rng.normal(size=dim)
        jac = f.jacobian(p_old)[0]
        if not np.all(np.isfinite(jac)) or abs(np.linalg.det(jac)) < 1e-12:
            skipped += 1
            continue
        p_new = f.forward(p_old)
        try:
            table, aux = transform_metric(m, f, p_new)
        except TensorError:
            skipped += 1
            continue
        new = contract_table(table, jac @ dc, aux).as_quaternion()
        old = kernel(m)(p_old, dc[None, :])[0]
        scale = _abs_contraction(m, p_old[0], dc)
        dev = float(np.max(np.abs(new[: len(old)] - old))) / max(scale, np.finfo(float).tiny)
        if dev > worst or witness is None:
            worst = max(worst, dev)
            if dev >= worst:
                witness = {"sample": s, "map": type(f).__name__, "point": p_old[0].tolist(),
                           "displacement": dc.tolist(), "deviation": dev}
    tol = INVARIANCE_TOL[family]
    note = f"{samples - skipped} samples, {skipped} skipped"
    if skipped == samples:
        return Verdict(INDETERMINATE, "every sampled map was singular; " + note, None)
    if worst < tol:
        return Verdict(PASS, note, worst)
    return Verdict(FAIL, f"relative deviation {worst:.3e} above {tol:g}; " + note, worst, witness)


# ------------------------------------------------------------- smoothness and topology


def _stacked(t: TensorField, points: np.ndarray) -> np.ndarray:
    """Stored components at many points, shaped (M, nnz, width) in sorted index order."""
    vals = t.evaluate(points)
    if not vals:
        return np.zeros((len(points), 0, WIDTH[t.codomain]))
    return np.stack([vals[idx] for idx in sorted(vals)], axis=1)


def probe_smoothness(t, samples: int = 16, seed: int = 0) -> Verdict:
    """First derivatives by central differences at three shrinking steps must settle.

    Indeterminate (never fail) when some component's estimates keep moving,
    since smoothness cannot be decided from point evaluations.
    """
    t = t.tensor if isinstance(t, MetricSpec) else t
    rng = np.random.default_rng(seed)
    pts = _points(t.chart, samples, rng)
    lo, hi = t.chart.lower, t.chart.upper
    worst, witness = 0.0, None
    for axis in range(t.dim):
        estimates = []
        for h0 in (1e-2, 1e-3, 1e-4):
            h = h0 * (1.0 + np.abs(pts[:, axis]))
            up, dn = pts.copy(), pts.copy()
            up[:, axis] = np.minimum(pts[:, axis] + h, hi[axis])
            dn[:, axis] = np.maximum(pts[:, axis] - h, lo[axis])
            width = up[:, axis] - dn[:, axis]
            a, b = _stacked(t, up), _stacked(t, dn)
            estimates.append((a - b) / width[:, None, None])
        drift = np.abs(estimates[2] - estimates[1]) / (1.0 + np.abs(estimates[1]))
        drift = drift.reshape(len(pts), -1)
        k = np.unravel_index(int(np.argmax(drift)), drift.shape)
        if drift[k] > worst:
            worst = float(drift[k])
            witness = {"axis": t.chart.names[axis], "point": pts[k[0]].tolist()}
    if not math.isfinite(worst):
        return Verdict(INDETERMINATE, "non-finite derivative estimate", None, witness)
    if worst < 1e-4:
        return Verdict(PASS, "difference quotients settle as the step shrinks", worst)
    return Verdict(INDETERMINATE, "difference quotients still moving at the smallest step", worst, witness)


def probe_topology(m, samples: int = 8, seed: int = 0, segments: int = 16) -> Verdict:
    """Chord lengths from p to p + s*u must shrink to zero with s.

    Since the distance never exceeds the chord length, this shows that
    coordinate-close points are distance-close.
    """
    m = as_metric(m)
    rng = np.random.default_rng(seed)
    pts = _points(m.chart, samples, rng)
    worst, witness = 0.0, None
    for p in pts:
        u = rng.normal(size=m.tensor.dim)
        u /= np.linalg.norm(u)
        lengths = []
        for s in (1e-1, 1e-2, 1e-3):
            q = m.chart.clip(p + s * u)
            lengths.append(curve_length(m, chord(p, q, segments)))
        ratio = lengths[2] / lengths[0] if lengths[0] > 0 else 0.0
        if not math.isfinite(ratio) or ratio > worst:
            worst = ratio if math.isfinite(ratio) else math.inf
            witness = {"point": p.tolist(), "direction": u.tolist(), "chord_lengths": lengths}
    if worst < 0.1:
        return Verdict(PASS, "chord lengths shrink with the coordinate distance", worst)
    return Verdict(FAIL, "chord length does not shrink with the coordinate distance", worst, witness)


# ------------------------------------------------------------- distance axioms


@dataclass(frozen=True)
class AxiomReport:
    nonnegativity: Verdict
    symmetry: Verdict
    triangle: Verdict
    identity: Verdict
    kind: str  # "metric" or "pseudo-metric"

    def to_json(self) -> dict:
        return {"nonnegativity": self.nonnegativity.to_json(), "symmetry": self.symmetry.to_json(),
                "triangle": self.triangle.to_json(), "identity": self.identity.to_json(), "kind": self.kind}


def check_distance_axioms(m, cfg: SolverConfig | None = None, pairs: int = 4, triples: int = 4,
                          seed: int = 0, null_vectors=None) -> AxiomReport:
    """Run the solver on seeded point sets and compare against the distance axioms.

    ``null_vectors`` are directions along which the line element vanishes
    (for example the null witnesses of ``classify_definiteness``); a zero
    distance between distinct points along them means a pseudo-metric.
    """
    m = as_metric(m)
    cfg = cfg or SolverConfig(seed=seed)
    eps = cfg.solver_eps
    rng = np.random.default_rng(seed)
    pts = _points(m.chart, 2 * pairs, rng)
    values, worst_sym, sym_w = [], 0.0, None
    for i in range(pairs):
        p, q = pts[2 * i], pts[2 * i + 1]
        d_pq, d_qp = distance(m, p, q, cfg).value, distance(m, q, p, cfg).value
        values += [d_pq, d_qp]
        if abs(d_pq - d_qp) >= worst_sym:
            worst_sym, sym_w = abs(d_pq - d_qp), {"p": p.tolist(), "q": q.tolist(), "d_pq": d_pq, "d_qp": d_qp}
    nonneg = Verdict(PASS if min(values, default=0.0) >= 0.0 else FAIL, "smallest sampled distance",
                     min(values, default=0.0))
    symmetry = Verdict(PASS if worst_sym <= eps else FAIL, f"largest |d(p,q) - d(q,p)|, tolerance {eps:g}",
                       worst_sym, None if worst_sym <= eps else sym_w)

    tri = _points(m.chart, 3 * triples, rng).reshape(triples, 3, m.chart.dim)
    margin, tri_w = math.inf, None
    for p, q, r in tri:
        d = [distance(m, a, b, cfg).value for a, b in ((p, q), (q, r), (p, r))]
        worst = min(d[0] + d[1] - d[2], d[0] + d[2] - d[1], d[1] + d[2] - d[0])
        if worst < margin:
            margin, tri_w = worst, {"p": p.tolist(), "q": q.tolist(), "r": r.tolist(), "distances": d}
    triangle = Verdict(PASS if margin >= -eps else FAIL, f"smallest triangle margin, tolerance {eps:g}",
                       margin, None if margin >= -eps else tri_w)

    identity = Verdict(PASS, "no distinct points at zero distance found")
    kind = "metric"
    for v in [] if null_vectors is None else null_vectors:
        # dyadic points and steps keep q - p exact, so a null direction stays exactly null
        v = np.asarray(v, dtype=float)
        p = _dyadic(_points(m.chart, 1, rng)[0])
        q = m.chart.clip(p + _dyadic(0.5 * v / np.max(np.abs(v))))
        if np.allclose(p, q):
            continue
        d = distance(m, p, q, cfg).value
        if d <= eps:
            identity = Verdict(FAIL, "identity of indiscernibles fails: pseudo-metric", d,
                               {"p": p.tolist(), "q": q.tolist(), "distance": d})
            kind = "pseudo-metric"
            break
    return AxiomReport(nonneg, symmetry, triangle, identity, kind)


def _dyadic(x: np.ndarray, bits: int = 20) -> np.ndarray:
    return np.round(np.asarray(x, dtype=float) * 2.0**bits) / 2.0**bits


# ------------------------------------------------------------- blending


def partition_of_unity(boxes, names) -> list[ex.Expr]:
    """Smooth weights subordinate to boxes, normalized to sum to one.

    Each box is a sequence of (lo, hi) intervals, one per coordinate in
    ``names``. The boxes must cover the region where the weights are used.
    """
    bumps = []
    for box in boxes:
        if len(box) != len(names):
            raise CheckError("each box needs one interval per coordinate")
        factors = [ex.Call("bump", (ex.Var(n), ex.num(lo), ex.num(hi))) for n, (lo, hi) in zip(names, box)]
        b = factors[0]
        for f in factors[1:]:
            b = ex.mul(b, f)
        bumps.append(b)
    total = bumps[0]
    for b in bumps[1:]:
        total = ex.add(total, b)
    return [ex.div(b, total) for b in bumps]


def blend_metrics(weights, locals_, samples: int = 64, seed: int = 0, regions=None) -> TensorField:
    """Pointwise convex combination sum_i w_i g_i of real symmetric (0,2) fields.

    ``weights`` are expressions over the shared chart. They must be
    nonnegative and sum to one within 1e-12 at sampled points, and each
    local field must be symmetric positive-definite on its region (a box of
    (lo, hi) intervals, or the whole chart when ``regions`` is None).
    """
    if len(weights) != len(locals_) or not locals_:
        raise CheckError("need one weight per local metric")
    chart = locals_[0].chart
    for g in locals_:
        if g.rank != (0, 2) or g.codomain != "real":
            raise CheckError("blending needs real (0,2) fields")
        if g.chart != chart:
            raise CheckError("local metrics must share a chart")
    params: dict[str, ex.Expr] = {}
    for g in locals_:
        for k, v in g.params.items():
            if k in params and params[k] != v:
                raise CheckError(f"parameter {k!r} differs between local metrics")
            params[k] = v
    ws = [ex.parse(w) for w in weights]
    rng = np.random.default_rng(seed)
    pts = _points(chart, samples, rng)
    ev = ex.Evaluator({n: pts[:, i] for i, n in enumerate(chart.names)}, params)
    wv = np.stack([np.broadcast_to(np.real(np.asarray(ev.eval(w), dtype=complex)), (samples,)) for w in ws])
    if np.any(~np.isfinite(wv)) or np.any(wv < 0.0):
        raise CheckError("weights must be finite and nonnegative")
    err = float(np.max(np.abs(wv.sum(axis=0) - 1.0)))
    if err > PARTITION_TOL:
        raise CheckError(f"weights do not sum to one (off by {err:.3e})")
    for i, g in enumerate(locals_):
        region = None if regions is None else regions[i]
        sub = pts if region is None else pts[np.all([(pts[:, k] >= lo) & (pts[:, k] <= hi)
                                                     for k, (lo, hi) in enumerate(region)], axis=0)]
        if check_symmetry(g, 8, seed).status != PASS:
            raise CheckError(f"local metric {i} is not symmetric")
        for p in sub:
            if eigen_classification(g, p) != "positive-definite":
                raise CheckError(f"local metric {i} is not positive-definite at {p.tolist()}")
    comps: dict[tuple[int, ...], ex.Expr] = {}
    for w, g in zip(ws, locals_):
        for idx, e in g.components.items():
            term = ex.s_times(w, e)
            comps[idx] = ex.s_plus(comps[idx], term) if idx in comps else term
    return TensorField((0, 2), chart, "real", comps, "fully-symmetric", params)


# ------------------------------------------------------------- point-set conditions


def point_set_conditions(chart) -> dict:
    """Topological hypotheses of the metrization theorem, asserted for coordinate boxes."""
    conditions = ("hausdorff", "second-countable", "locally-euclidean", "paracompact")
    return {
        "conditions": {c: {"status": PASS, "basis": "asserted, not computed"} for c in conditions},
        "note": (f"a box in R^{chart.dim} with the subspace topology has all four properties; "
                 "with regularity these are the hypotheses of the Urysohn metrization theorem"),
    }


# ------------------------------------------------------------- full report


@dataclass(frozen=True)
class PropertyReport:
    name: str
    seed: int
    samples: int
    symmetry: Verdict
    definiteness: Definiteness
    invariance: Verdict
    smoothness: Verdict
    topology: Verdict
    point_set: dict
    distance_axioms: AxiomReport | None = None

    @property
    def failed(self) -> bool:
        """True when a structural check fails; sign patterns and pseudo-metrics are informative."""
        return FAIL in (self.symmetry.status, self.invariance.status)

    def to_json(self) -> dict:
        return {
            "metric": self.name,
            "seed": self.seed,
            "samples": self.samples,
            "verdicts": {
                "symmetry": self.symmetry.to_json(),
                "invariance": self.invariance.to_json(),
                "smoothness": self.smoothness.to_json(),
                "topology": self.topology.to_json(),
            },
            "definiteness": self.definiteness.to_json(),
            "point_set": self.point_set,
            "distance_axioms": None if self.distance_axioms is None else self.distance_axioms.to_json(),
            "failed": self.failed,
        }


def check_metric(m, seed: int, samples: int = DEFAULT_SAMPLES, invariance_samples: int = 100,
                 cfg: SolverConfig | None = None, axioms: bool = True) -> PropertyReport:
    m = as_metric(m)
    definiteness = classify_definiteness(m, samples, seed)
    null = [definiteness.witnesses["null"]["vector"]] if "null" in definiteness.witnesses else []
    axiom_report = None
    if axioms:
        axiom_report = check_distance_axioms(m, cfg or SolverConfig(segments=16, restarts=2, seed=seed),
                                             seed=seed, null_vectors=null)
    return PropertyReport(
        name=m.name or "unnamed",
        seed=seed,
        samples=samples,
        symmetry=check_symmetry(m.tensor, samples, seed),
        definiteness=definiteness,
        invariance=check_invariance(m, invariance_samples, seed),
        smoothness=probe_smoothness(m.tensor, seed=seed),
        topology=probe_topology(m, seed=seed),
        point_set=point_set_conditions(m.chart),
        distance_axioms=axiom_report,
    )
