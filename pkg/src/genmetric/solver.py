"""Discrete minimization of the generalized length functional.

A curve is a polyline of N + 1 nodes in chart coordinates, parametrized
uniformly over t in [0, 1]. Its length is the quadrature of
real_root(norm(line_element(x(t), x'(t))), U + L). The distance between
two points is the smallest length found over the straight chord and a set
of seeded restarts.

Each restart perturbs a starting curve (the chord or a bent two-leg curve
from a waypoint scan) with Gaussian noise and minimizes on a coarse grid
while a rounding of the integrand near zero-cost directions is shrunk to
zero. The result is then refined while doubling the resolution. Steps are
quasi-Newton directions built on a Sobolev preconditioner, with backtracking
and projection onto the chart bounds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._special import simpson_weights
from .scalars import real_root_array
from .tensor import MetricSpec, as_metric, kernel

QUADRATURES = ("simpson", "midpoint")


@dataclass(frozen=True)
class SolverConfig:
    segments: int = 64
    quadrature: str = "simpson"
    restarts: int = 8
    max_iters: int = 500
    step_tol: float = 1e-10
    value_tol: float = 1e-9
    seed: int = 0
    noise: float = 0.1
    waypoints: int = 32
    workers: int = 1

    def __post_init__(self) -> None:
        if self.segments < 2:
            raise ValueError("need at least two segments")
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"quadrature must be one of {QUADRATURES}")
        if self.restarts < 0 or self.max_iters < 0 or self.waypoints < 0:
            raise ValueError("restarts, max_iters and waypoints must be nonnegative")
        if not (self.step_tol > 0 and self.value_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def solver_eps(self) -> float:
        """Slack used when comparing distances from independent solves."""
        return 2.0 * self.value_tol

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DistanceResult:
    value: float
    best_curve: np.ndarray
    restart_values: tuple[float, ...]
    converged: bool
    evaluations: int
    chord_value: float
    best_index: int  # -1 for the chord, else the restart number
    config: SolverConfig
    diagnostics: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "restarts": list(self.restart_values),
            "curve": self.best_curve.tolist(),
            "config": self.config.to_json(),
            "chord": self.chord_value,
            "best_index": self.best_index,
            "evaluations": self.evaluations,
            "diagnostics": list(self.diagnostics),
        }


class LengthFunctional:
    """Length of discrete curves for one metric and quadrature rule."""

    def __init__(self, metric, segments: int, quadrature: str = "simpson") -> None:
        self.metric: MetricSpec = as_metric(metric)
        self.n = int(segments)
        self.quadrature = quadrature
        self.order = sum(self.metric.rank)
        self.h = 1.0 / self.n
        if quadrature == "simpson":
            self.weights = simpson_weights(self.n, self.h)
        elif quadrature == "midpoint":
            self.weights = np.full(self.n, self.h)
        else:
            raise ValueError(f"unknown quadrature {quadrature!r}")
        self.evaluations = 0
        self.smoothing = 0.0
        self.power = 1
        self.kernel = kernel(self.metric)

    def integrand(self, points: np.ndarray, vels: np.ndarray) -> np.ndarray:
        """real_root(norm(line element)) for rows of points and velocities."""
        self.evaluations += len(points)
        vals = self.kernel(points, vels)
        mag2 = np.sum(vals * vals, axis=1)
        if self.smoothing > 0.0:
            # round the cusp at zero-cost directions without charging for them
            speed2 = np.sum(vels * vels, axis=1)
            mag2 = mag2 + self.smoothing**2 * speed2**self.order
            out = real_root_array(np.sqrt(mag2), self.order)
            out = out - (1.0 - LENGTH_PENALTY) * self.smoothing ** (1.0 / self.order) * np.sqrt(speed2)
            out = np.maximum(out, 0.0)
        else:
            out = real_root_array(np.sqrt(mag2), self.order)
        out[~np.isfinite(out)] = np.nan
        return out if self.power == 1 else out**self.power

    def samples(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature points and velocities of a curve with nodes ``x``."""
        if self.quadrature == "midpoint":
            return 0.5 * (x[1:] + x[:-1]), (x[1:] - x[:-1]) / self.h
        vel = np.empty_like(x)
        vel[1:-1] = (x[2:] - x[:-2]) / (2.0 * self.h)
        vel[0] = (x[1] - x[0]) / self.h
        vel[-1] = (x[-1] - x[-2]) / self.h
        return x, vel

    def length(self, x: np.ndarray) -> float:
        pts, vel = self.samples(x)
        f = self.integrand(pts, vel)
        return float(np.dot(self.weights, f))

    def lengths(self, xs: np.ndarray) -> np.ndarray:
        """Lengths of a stack of curves with shape (M, N + 1, D) in one kernel call."""
        m, _, d = xs.shape
        pts, vel = zip(*(self.samples(x) for x in xs))
        f = self.integrand(np.concatenate(pts), np.concatenate(vel)).reshape(m, -1)
        return f @ self.weights

    def gradient(self, x: np.ndarray, fd_scale: float) -> np.ndarray:
        """Central-difference gradient with respect to the nodes (zero at endpoints).

        Moving node j only changes the quadrature samples next to it, so every
        perturbation re-evaluates at most three samples, and all perturbations
        go through the kernel in one batch.
        """
        n, d = self.n, x.shape[1]
        pts, vel = self.samples(x)
        lo, hi = self.metric.chart.lower, self.metric.chart.upper
        inner = x[1:-1]
        step = 1e-6 * np.maximum(np.abs(inner), fd_scale)
        delta_up = np.minimum(inner + step, hi) - inner  # (n-1, d)
        delta_dn = np.maximum(inner - step, lo) - inner
        js = np.arange(1, n)
        # samples touched by node j: index, position factor, velocity factor
        if self.quadrature == "midpoint":
            sidx = np.stack([js - 1, js])
            pf = np.full((2, n - 1), 0.5)
            vf = np.stack([np.full(n - 1, 1.0 / self.h), np.full(n - 1, -1.0 / self.h)])
        else:
            sidx = np.stack([js - 1, js, js + 1])
            pf = np.stack([np.zeros(n - 1), np.ones(n - 1), np.zeros(n - 1)])
            vf = np.stack([
                np.where(js - 1 == 0, 1.0, 0.5) / self.h,
                np.zeros(n - 1),
                -np.where(js + 1 == n, 1.0, 0.5) / self.h,
            ])
        k = len(sidx)
        deltas = np.stack([delta_up, delta_dn]).transpose(0, 2, 1)  # (2, d, n-1)
        eye = np.eye(d)
        shift = deltas[:, :, None, :, None] * eye[None, :, None, None, :]  # (2, d, 1, n-1, d)
        p_rows = pts[sidx][None, None] + pf[None, None, :, :, None] * shift
        v_rows = vel[sidx][None, None] + vf[None, None, :, :, None] * shift
        f = self.integrand(p_rows.reshape(-1, d), v_rows.reshape(-1, d)).reshape(2, d, k, n - 1)
        wsum = np.einsum("kj,sdkj->sdj", self.weights[sidx], f)  # (2, d, n-1)
        width = (delta_up - delta_dn).T  # (d, n-1)
        grad = np.zeros_like(x)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(width > 0, (wsum[0] - wsum[1]) / width, 0.0)
        g[~np.isfinite(g)] = 0.0
        grad[1:-1] = g.T
        return grad


def chord(p, q, segments: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, segments + 1)[:, None]
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    x = (1.0 - t) * p + t * q
    x[0], x[-1] = p, q
    return x


def polyline(p, w, q, segments: int) -> np.ndarray:
    """Two straight legs p -> w -> q sharing the nodes as evenly as possible."""
    k = segments // 2
    first = chord(p, w, k)
    second = chord(w, q, segments - k)
    return np.concatenate([first, second[1:]])


def waypoint_scan(fn: LengthFunctional, p: np.ndarray, q: np.ndarray, cfg: SolverConfig,
                  keep: int) -> list[np.ndarray]:
    """Shortest two-leg polylines through seeded random waypoints.

    Waypoints are Gaussian around the midpoint with a spread equal to the
    chord length. A local search started from the chord cannot leave the
    chord's basin when the chord is a strict local minimum, so the restarts
    also start from the best of these bent curves.
    """
    if cfg.waypoints == 0 or keep == 0:
        return []
    chart = fn.metric.chart
    scale = float(np.linalg.norm(q - p))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1 << 32]))
    ws = 0.5 * (p + q) + rng.normal(0.0, scale, size=(cfg.waypoints, len(p)))
    ws = chart.clip(ws)
    curves = np.stack([polyline(p, w, q, fn.n) for w in ws])
    saved = fn.smoothing, fn.power
    fn.smoothing, fn.power = SCAN_SMOOTHING, 1
    try:
        with np.errstate(all="ignore"):
            vals = fn.lengths(curves)
    finally:
        fn.smoothing, fn.power = saved
    vals = np.where(np.isfinite(vals), vals, np.inf)
    order = np.argsort(vals, kind="stable")
    return [curves[i] for i in order[:keep] if np.isfinite(vals[i])]


def curve_length(metric, curve, quadrature: str = "simpson") -> float:
    """Length of a polyline given by its nodes, parametrized uniformly on [0, 1]."""
    m = as_metric(metric)
    x = m.chart.check(curve)
    if len(x) < 3:
        raise ValueError("a curve needs at least three nodes")
    return LengthFunctional(m, len(x) - 1, quadrature).length(x)


@dataclass
class _RestartOutcome:
    curve: np.ndarray | None
    value: float
    converged: bool
    evaluations: int
    note: str = ""


def velocity_matrix(segments: int, quadrature: str) -> np.ndarray:
    """Linear map from nodes to the velocities used by the quadrature rule."""
    n, h = segments, 1.0 / segments
    if quadrature == "midpoint":
        d = (np.eye(n, n + 1, k=1) - np.eye(n, n + 1)) / h
        return d
    d = np.zeros((n + 1, n + 1))
    d[0, :2] = [-1.0 / h, 1.0 / h]
    d[n, n - 1:] = [-1.0 / h, 1.0 / h]
    for i in range(1, n):
        d[i, i - 1] = -0.5 / h
        d[i, i + 1] = 0.5 / h
    return d


def sobolev_operator(segments: int, quadrature: str = "simpson") -> np.ndarray:
    """Inverse of the quadrature-weighted velocity Gram matrix on interior nodes.

    This is the exact inverse Hessian (up to a constant) of the discrete
    energy for a constant Euclidean metric, so it turns nodal gradients into
    well-scaled, smooth search directions.
    """
    d = velocity_matrix(segments, quadrature)
    if quadrature == "midpoint":
        w = np.full(segments, 1.0 / segments)
    else:
        w = simpson_weights(segments, 1.0 / segments)
    gram = d.T @ (w[:, None] * d)
    return np.linalg.inv(gram[1:-1, 1:-1])


# Rounding widths for the continuation on the coarse curve, then on the full one.
SMOOTHING_STAGES = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-6, 0.0)
REFINE_STAGES = (1e-4, 1e-6, 0.0)
SCAN_SMOOTHING = 1e-1
COARSE_SEGMENTS = 16
LENGTH_PENALTY = 0.0


def resample(x: np.ndarray, segments: int, parity: bool = False) -> np.ndarray:
    """Nodes of the same polyline at ``segments`` uniform parameter steps.

    With ``parity`` the even and odd node chains are interpolated separately.
    Centered differences only couple nodes two apart, so a minimizer of the
    Simpson functional can be two interleaved paths; this keeps them apart.
    """
    t_old = np.linspace(0.0, 1.0, len(x))
    t_new = np.linspace(0.0, 1.0, segments + 1)
    out = np.empty((segments + 1, x.shape[1]))
    last = len(x) - 1
    if parity:
        # both chains share the fixed endpoints
        chains = [(np.unique(np.r_[0, np.arange(start, last + 1, 2), last]), start) for start in (0, 1)]
    else:
        chains = [(np.arange(last + 1), None)]
    for src, start in chains:
        dst = slice(None) if start is None else slice(start, None, 2)
        for k in range(x.shape[1]):
            out[dst, k] = np.interp(t_new[dst], t_old[src], x[src, k])
    out[0], out[-1] = x[0], x[-1]
    return out


def _continuation(fn: LengthFunctional, x0: np.ndarray, cfg: SolverConfig, scale: float,
                  stages: tuple[float, ...], budget: int) -> _RestartOutcome:
    """Minimize under a decreasing rounding width; keep the shortest true curve seen."""
    x = x0.copy()
    fn.smoothing, fn.power = 0.0, 1
    best = fn.length(x)
    if not math.isfinite(best):
        return _RestartOutcome(None, math.inf, False, fn.evaluations, "non-finite length on the initial curve")
    best_x = x
    converged = True
    for delta in stages:
        # squared integrand while smoothed: smooth at the zero set, favours uniform speed
        fn.smoothing = delta
        fn.power = 2 if delta > 0 else 1
        out = _descend_stage(fn, x, cfg, scale, max(1, budget // len(stages)))
        fn.smoothing, fn.power = 0.0, 1
        if out.curve is None:
            return out
        x = out.curve
        converged = out.converged
        value = fn.length(x)
        if value < best:
            best, best_x = value, x
    return _RestartOutcome(best_x, best, converged, fn.evaluations)


def tile(x: np.ndarray, copies: int) -> np.ndarray:
    """``copies`` shrunken copies of a curve laid end to end between the same endpoints.

    Each copy covers 1/copies of the displacement in 1/copies of the parameter
    interval, so nodal velocities are unchanged. Every other copy is the curve
    run backwards and reflected through the chord midpoint, which also goes
    from start to end; neighbouring copies then meet with equal velocities.
    For metrics with constant components the Simpson length is preserved.
    """
    mirrored = x[0] + x[-1] - x[::-1]
    start, step = x[0], (x[-1] - x[0]) / copies
    parts = []
    for j in range(copies):
        y = x if j % 2 == 0 else mirrored
        piece = start + j * step + (y - y[0]) / copies
        parts.append(piece if j == 0 else piece[1:])
    out = np.concatenate(parts)
    out[-1] = x[-1]
    return out


def levels(segments: int) -> list[int]:
    """Resolutions visited on the way to ``segments``, coarsest first.

    Halving stops before going below COARSE_SEGMENTS, so the chain for 2N
    is the chain for N followed by 2N whenever N >= COARSE_SEGMENTS.
    """
    chain = [segments]
    while chain[-1] % 2 == 0 and chain[-1] // 2 >= COARSE_SEGMENTS:
        chain.append(chain[-1] // 2)
    return chain[::-1]


def _descend(metric, x0: np.ndarray, cfg: SolverConfig, scale: float) -> _RestartOutcome:
    """Continuation at the coarsest level, then refinement at each doubled resolution."""
    chain = levels(cfg.segments)
    coarse = LengthFunctional(metric, chain[0], cfg.quadrature)
    out = _continuation(coarse, x0, cfg, scale, SMOOTHING_STAGES, cfg.max_iters)
    evaluations = out.evaluations
    for n in chain[1:]:
        if out.curve is None:
            break
        fn = LengthFunctional(metric, n, cfg.quadrature)
        starts = [resample(out.curve, n, cfg.quadrature == "simpson"), tile(out.curve, 2)]
        with np.errstate(all="ignore"):
            values = [fn.length(x) for x in starts]
        values = [v if math.isfinite(v) else math.inf for v in values]
        out = _continuation(fn, starts[int(np.argmin(values))], cfg, scale, REFINE_STAGES,
                            max(1, cfg.max_iters // 2))
        evaluations += out.evaluations
    out.evaluations = evaluations
    return out


def _two_loop(g: np.ndarray, history: list, smooth: np.ndarray) -> np.ndarray:
    """Limited-memory quasi-Newton direction seeded with the Sobolev operator."""
    q = g.copy()
    alphas = []
    for s_k, y_k, rho in reversed(history):
        a = rho * np.sum(s_k * q)
        alphas.append(a)
        q -= a * y_k
    if history:
        s_k, y_k, _ = history[-1]
        hy = smooth @ y_k
        gamma = np.sum(s_k * y_k) / np.sum(y_k * hy)
    else:
        gamma = 1.0
    r = gamma * (smooth @ q)
    for (s_k, y_k, rho), a in zip(history, reversed(alphas)):
        b = rho * np.sum(y_k * r)
        r += (a - b) * s_k
    return -r


def _descend_stage(fn: LengthFunctional, x0: np.ndarray, cfg: SolverConfig, scale: float,
                   max_iters: int) -> _RestartOutcome:
    smooth = sobolev_operator(fn.n, fn.quadrature)
    lo, hi = fn.metric.chart.lower, fn.metric.chart.upper
    x = x0.copy()
    f = fn.length(x)
    if not math.isfinite(f):
        return _RestartOutcome(None, math.inf, False, fn.evaluations, "non-finite length on the initial curve")
    g = fn.gradient(x, scale)[1:-1]
    history: list = []
    converged = False
    stall = 0
    first = True
    for _ in range(max_iters):
        d = _two_loop(g, history, smooth)
        slope = float(np.sum(d * g))
        if not slope < 0.0:
            history.clear()
            d = -(smooth @ g)
            slope = float(np.sum(d * g))
            if not slope < 0.0:
                converged = True
                break
        dmax = float(np.max(np.abs(d)))
        alpha = 1.0
        accepted = False
        while alpha * dmax >= cfg.step_tol * scale:
            trial = x.copy()
            trial[1:-1] = np.clip(x[1:-1] + alpha * d, lo, hi)
            ft = fn.length(trial)
            if math.isfinite(ft) and ft <= f + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            converged = True
            break
        first = False
        g_new = fn.gradient(trial, scale)[1:-1]
        s_k = trial[1:-1] - x[1:-1]
        y_k = g_new - g
        sy = float(np.sum(s_k * y_k))
        if sy > 1e-12 * math.sqrt(float(np.sum(s_k * s_k)) * float(np.sum(y_k * y_k))):
            history.append((s_k, y_k, 1.0 / sy))
            if len(history) > 8:
                history.pop(0)
        gain = f - ft
        moved = float(np.max(np.abs(s_k)))
        x, f, g = trial, ft, g_new
        if moved < cfg.step_tol * scale:
            converged = True
            break
        stall = stall + 1 if gain < cfg.value_tol else 0
        if stall >= 3:
            converged = True
            break
    return _RestartOutcome(x, f, converged, fn.evaluations)


def distance(metric, p, q, cfg: SolverConfig | None = None) -> DistanceResult:
    """Approximate infimum of the length functional over curves from p to q.

    The search always runs from the lexicographically smaller endpoint, and
    the curve is reversed afterwards if needed. Reversing a curve negates its
    velocities, which leaves the magnitude of every line element unchanged,
    so both orders of the same pair report the same value.
    """
    cfg = cfg or SolverConfig()
    m = as_metric(metric)
    pp = m.chart.check(p)[0]
    qq = m.chart.check(q)[0]
    if tuple(qq) >= tuple(pp):
        return _solve(m, pp, qq, cfg)
    res = _solve(m, qq, pp, cfg)
    # the reversed curve has the same length up to summation order; keep the canonical value
    return replace(res, best_curve=res.best_curve[::-1].copy())


def _solve(m: MetricSpec, pp: np.ndarray, qq: np.ndarray, cfg: SolverConfig) -> DistanceResult:
    chart = m.chart
    scale = float(np.linalg.norm(qq - pp))
    x_chord = chord(pp, qq, cfg.segments)
    fn = LengthFunctional(m, cfg.segments, cfg.quadrature)
    chord_value = fn.length(x_chord)
    evaluations = fn.evaluations
    diagnostics = []
    if not math.isfinite(chord_value):
        diagnostics.append("non-finite length on the chord")
        chord_value = math.inf
    if scale == 0.0:
        return DistanceResult(chord_value, x_chord, (), True, evaluations, chord_value, -1, cfg, tuple(diagnostics))

    n_coarse = levels(cfg.segments)[0]
    coarse_fn = LengthFunctional(m, n_coarse, cfg.quadrature)
    bases = [chord(pp, qq, n_coarse)] + waypoint_scan(coarse_fn, pp, qq, cfg, cfg.restarts - 1)
    evaluations += coarse_fn.evaluations

    def run(r: int) -> _RestartOutcome:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r]))
        x0 = bases[r % len(bases)].copy()
        x0[1:-1] += rng.normal(0.0, cfg.noise * scale, size=x0[1:-1].shape)
        x0 = chart.clip(x0)
        x0[0], x0[-1] = pp, qq
        return _descend(m, x0, cfg, scale)

    if cfg.workers > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, range(cfg.restarts)))
    else:
        outcomes = [run(r) for r in range(cfg.restarts)]

    best_value, best_curve, best_index = chord_value, x_chord, -1
    converged = True
    for r, out in enumerate(outcomes):
        evaluations += out.evaluations
        if out.note:
            diagnostics.append(f"restart {r}: {out.note}")
            continue
        converged = converged and out.converged
        if out.value < best_value:
            best_value, best_curve, best_index = out.value, out.curve, r
    if not math.isfinite(best_value):
        raise ValueError("no finite-length curve found between the points")
    value = curve_length(m, best_curve, cfg.quadrature)
    restart_values = tuple(out.value for out in outcomes)
    return DistanceResult(value, best_curve, restart_values, converged, evaluations,
                          chord_value, best_index, cfg, tuple(diagnostics))


@dataclass(frozen=True)
class TriangleReport:
    d_pq: float
    d_qr: float
    d_pr: float
    margin: float  # smallest of (sum of two sides - third side)
    tolerance: float

    @property
    def violated(self) -> bool:
        return self.margin < -self.tolerance


def triangle_probe(metric, p, q, r, cfg: SolverConfig | None = None) -> TriangleReport:
    """Solve the three pairwise distances and report the worst triangle margin."""
    cfg = cfg or SolverConfig()
    d_pq = distance(metric, p, q, cfg).value
    d_qr = distance(metric, q, r, cfg).value
    d_pr = distance(metric, p, r, cfg).value
    margin = min(d_pq + d_qr - d_pr, d_pq + d_pr - d_qr, d_qr + d_pr - d_pq)
    return TriangleReport(d_pq, d_qr, d_pr, margin, cfg.solver_eps)
