"""Experiment driver: simplex families over refinement ladders, distortion
measurements and convergence-order fits.

For a family of geodesic simplices shrunk by factors of two, the driver
measures how far the pulled-back manifold metric is from the flat
edge-length metric (and the corresponding first/second derivative gaps),
then fits log-log slopes.  Expected orders: metric gap 2, connection gap
1, differential-vs-flat-model gap 2, second derivative 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .barycentric import (KarcherChart, SolverConfig, hessian, karcher_mean,
                          sigma)
from .errors import NonRealizableError
from .flat_simplex import BarycentricWeight, SimplexTangent, fullness
from .manifolds import Manifold, ManifoldPoint, TangentVector

MIN_INTERIOR_WEIGHT = 0.05


@dataclass(frozen=True, eq=False)
class SimplexFamily:
    """A base direction configuration together with a scale ladder."""

    manifold: Manifold
    center: ManifoldPoint
    directions: tuple[TangentVector, ...]
    ladder: tuple[float, ...]
    fullness_target: float

    @property
    def n(self) -> int:
        return len(self.directions) - 1


def equilateral_family(manifold: Manifold, center: ManifoldPoint,
                       h0: float = 0.2, levels: int = 5) -> SimplexFamily:
    """Equally spaced tangent directions (a regular triangle) and the
    ladder h0, h0/2, ..., h0/2^(levels-1)."""
    basis = manifold.tangent_basis(center)
    e1, e2 = basis[0], basis[1]
    dirs = []
    for k in range(3):
        ang = 2.0 * math.pi * k / 3.0
        dirs.append(math.cos(ang) * e1 + math.sin(ang) * e2)
    ladder = tuple(h0 * 0.5 ** k for k in range(levels))
    return SimplexFamily(manifold, center, tuple(dirs), ladder,
                         fullness_target=math.sqrt(3.0) / 2.0)


def generate_geodesic_simplex(manifold: Manifold, center: ManifoldPoint,
                              directions, h: float,
                              solver: SolverConfig | None = None) -> KarcherChart:
    """Vertices exp_center(s * u_i) with s chosen so the tangent-space
    simplex has maximal edge h; the geodesic edge lengths then differ from
    h only at order C0 h^3."""
    units = []
    for d in directions:
        nd = manifold.norm(d)
        if nd == 0.0:
            raise ValueError("zero direction vector")
        units.append(d * (1.0 / nd))
    sep = 0.0
    for i in range(len(units)):
        for j in range(i + 1, len(units)):
            diff = units[i] - units[j]
            sep = max(sep, manifold.norm(diff))
    scale = h / sep
    if scale >= manifold.bounds.convexity_radius:
        raise ValueError("requested scale exceeds the convexity radius")
    vertices = [manifold.exp(center, scale * u) for u in units]
    chart = KarcherChart(manifold, vertices, solver=solver)
    if not chart.flat_metric.realizable:
        raise NonRealizableError("generated edge lengths are not realizable")
    return chart


def achieved_fullness(chart: KarcherChart) -> float:
    return fullness(chart.flat_metric, chart.h)


def interior_weights(n: int, extra: int = 20) -> list[BarycentricWeight]:
    """Sample weights: the barycenter, edge midpoints pulled inward to the
    floor MIN_INTERIOR_WEIGHT, and a low-discrepancy interior set."""
    bary = np.full(n + 1, 1.0 / (n + 1))
    out = [BarycentricWeight(bary)]
    pull = MIN_INTERIOR_WEIGHT * (n + 1)
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            lam = np.zeros(n + 1)
            lam[i] = lam[j] = 0.5
            out.append(BarycentricWeight((1.0 - pull) * lam + pull * bary))
    if extra > 0:
        halton = qmc.Halton(d=n, scramble=False)
        pts = halton.random(extra)
        for row in pts:
            z = np.sort(row)
            lam = np.diff(np.concatenate([[0.0], z, [1.0]]))
            out.append(BarycentricWeight((1.0 - pull) * lam + pull * bary))
    return out


@dataclass(frozen=True)
class DistortionSample:
    """Per-level normalized suprema over sampled weights and an
    edge-length-orthonormal tangent basis."""

    h: float
    theta: float
    sup_metric_gap: float
    sup_connection_gap: float
    sup_dx_sigma_gap: float
    sup_nabla_dx: float

    def to_dict(self) -> dict:
        return {
            "h": self.h, "theta": self.theta,
            "metric_gap": self.sup_metric_gap,
            "connection_gap": self.sup_connection_gap,
            "dx_sigma_gap": self.sup_dx_sigma_gap,
            "nabla_dx": self.sup_nabla_dx,
        }

    @staticmethod
    def from_dict(d: dict) -> "DistortionSample":
        return DistortionSample(d["h"], d["theta"], d["metric_gap"],
                                d["connection_gap"], d["dx_sigma_gap"],
                                d["nabla_dx"])


QUANTITIES = ("metric_gap", "connection_gap", "dx_sigma_gap", "nabla_dx")
EXPECTED_SLOPES = {"metric_gap": 2.0, "connection_gap": 1.0,
                   "dx_sigma_gap": 2.0, "nabla_dx": 1.0}


def _orthonormal_tangent_frame(chart: KarcherChart) -> np.ndarray:
    """Columns: reduced coordinates of a basis orthonormal for the flat
    edge-length metric."""
    L = chart.flat_metric.cholesky
    if L is None:
        raise NonRealizableError("chart's flat metric is not positive definite")
    return np.linalg.solve(L, np.eye(chart.n)).T


def _full_tangent(reduced: np.ndarray) -> SimplexTangent:
    v = np.concatenate([[-reduced.sum()], reduced])
    return SimplexTangent(v)


def measure_distortion(chart: KarcherChart,
                       sample_weights) -> DistortionSample:
    """Suprema of the four distortion quantities over the given interior
    weights."""
    man = chart.manifold
    n = chart.n
    B = _orthonormal_tangent_frame(chart)
    metric_gap = conn_gap = dx_sigma = nabla_sup = 0.0
    for lam in sample_weights:
        if np.min(lam.values) < MIN_INTERIOR_WEIGHT - 1e-12:
            raise ValueError("sample weights must be interior (entries >= 0.05)")
        jet = hessian(chart, lam)
        a = jet.point
        dxB = jet.dx_matrix @ B                     # (coord_dim, n)
        xg = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                xg[i, j] = man._ip(a, dxB[:, i], dxB[:, j])
        metric_gap = max(metric_gap, float(np.max(np.abs(xg - np.eye(n)))))

        for i in range(n):
            sig = sigma(chart, lam, _full_tangent(B[:, i]), at=a)
            gap_vec = dxB[:, i] - sig.components
            dx_sigma = max(dx_sigma, math.sqrt(max(
                man._ip(a, gap_vec, gap_vec), 0.0)))

        nb = np.einsum("klc,ka,lb->abc", jet.nabla_dx_tensor, B, B)
        for i in range(n):
            for j in range(n):
                nabla_sup = max(nabla_sup, math.sqrt(max(
                    man._ip(a, nb[i, j], nb[i, j]), 0.0)))
        # flat derivative of the pulled-back metric via the product rule
        for u in range(n):
            for i in range(n):
                for j in range(n):
                    val = (man._ip(a, nb[u, i], dxB[:, j])
                           + man._ip(a, dxB[:, i], nb[u, j]))
                    conn_gap = max(conn_gap, abs(val))

    return DistortionSample(
        h=chart.h, theta=achieved_fullness(chart),
        sup_metric_gap=metric_gap, sup_connection_gap=conn_gap,
        sup_dx_sigma_gap=dx_sigma, sup_nabla_dx=nabla_sup)


def connection_gap_fd(chart: KarcherChart, lam: BarycentricWeight,
                      step: float = 1e-4) -> float:
    """Cross-check value of the largest flat metric derivative computed by
    differencing the pulled-back metric matrix along weight lines."""
    from .barycentric import pullback_metric

    man = chart.manifold
    n = chart.n
    B = _orthonormal_tangent_frame(chart)
    worst = 0.0
    for u in range(n):
        direction = np.concatenate([[-B[:, u].sum()], B[:, u]])
        lp = BarycentricWeight(lam.values + step * direction)
        lm = BarycentricWeight(lam.values - step * direction)
        dmat = (pullback_metric(chart, lp) - pullback_metric(chart, lm)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(B.T @ dmat @ B))))
    return worst


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    n_used: int
    dropped_coarsest: bool

    @property
    def confidence(self) -> float:
        """Half-width of a two-standard-error interval."""
        return 2.0 * self.stderr

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "stderr": self.stderr, "n_used": self.n_used,
                "dropped_coarsest": self.dropped_coarsest}

    @staticmethod
    def from_dict(d: dict) -> "SlopeFit":
        return SlopeFit(d["slope"], d["intercept"], d["stderr"],
                        d["n_used"], d["dropped_coarsest"])


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, np.ndarray, float]:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else math.inf
    return float(coef[0]), float(coef[1]), resid, stderr


def fit_slope(hs, values) -> SlopeFit:
    """Least-squares slope of log(value) against log(h); the coarsest level
    is dropped when its residual is an outlier (pre-asymptotic pollution)."""
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(hs) < 4:
        raise ValueError("need at least four ladder levels to fit a slope")
    if np.min(values) <= 1e-13:
        return SlopeFit(math.nan, math.nan, math.nan, len(hs), False)
    x, y = np.log(hs), np.log(values)
    slope, intercept, resid, stderr = _ols(x, y)
    coarse = int(np.argmax(hs))
    rms = math.sqrt(float(np.mean(resid ** 2)))
    if abs(resid[coarse]) > max(2.0 * rms, 1e-6) and len(hs) >= 5:
        keep = np.ones(len(hs), dtype=bool)
        keep[coarse] = False
        slope, intercept, _, stderr = _ols(x[keep], y[keep])
        return SlopeFit(slope, intercept, stderr, int(keep.sum()), True)
    return SlopeFit(slope, intercept, stderr, len(hs), False)


@dataclass(frozen=True)
class ConvergenceReport:
    samples: tuple[DistortionSample, ...]
    fitted_slopes: dict[str, SlopeFit] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "samples": [s.to_dict() for s in self.samples],
            "fitted_slopes": {k: v.to_dict() for k, v in self.fitted_slopes.items()},
        }

    @staticmethod
    def from_dict(d: dict) -> "ConvergenceReport":
        return ConvergenceReport(
            samples=tuple(DistortionSample.from_dict(s) for s in d["samples"]),
            fitted_slopes={k: SlopeFit.from_dict(v)
                           for k, v in d["fitted_slopes"].items()},
        )


def fit_orders(samples) -> ConvergenceReport:
    """Fit one slope per distortion quantity across the ladder."""
    samples = tuple(samples)
    hs = [s.h for s in samples]
    slopes = {}
    for name in QUANTITIES:
        values = [s.to_dict()[name] for s in samples]
        slopes[name] = fit_slope(hs, values)
    return ConvergenceReport(samples=samples, fitted_slopes=slopes)


def run_distortion_sweep(family: SimplexFamily,
                         extra_weights: int = 20) -> ConvergenceReport:
    """Generate the ladder, measure every level and fit orders.

    Levels are generated in ladder order and aggregation is a pure
    reduction, so results do not depend on evaluation scheduling.
    """
    samples = []
    weights = interior_weights(family.n, extra=extra_weights)
    for h in family.ladder:
        chart = generate_geodesic_simplex(family.manifold, family.center,
                                          family.directions, h)
        theta = achieved_fullness(chart)
        if theta < 0.9 * family.fullness_target:
            raise ValueError(
                f"simplex at h={h} is too thin: fullness {theta:.3f}")
        samples.append(measure_distortion(chart, weights))
    report = fit_orders(samples)

    C0 = family.manifold.bounds.C0
    h_safe = 0.2 / math.sqrt(C0) if C0 > 0 else math.inf
    for name in QUANTITIES:
        vals = [s.to_dict()[name] for s in samples
                if s.h <= h_safe]
        if any(b > a * (1 + 1e-9) for a, b in zip(vals, vals[1:])):
            warnings.warn(f"distortion quantity {name} is not monotone "
                          "along the ladder", RuntimeWarning)
    return report


@dataclass(frozen=True)
class EdgeLengthReport:
    """Gap between geodesic edge lengths and tangent-space edge lengths
    seen from the barycenter point."""

    h: float
    max_rel_gap: float


def check_edge_length_comparison(chart: KarcherChart) -> EdgeLengthReport:
    man = chart.manifold
    n = chart.n
    lam = BarycentricWeight.barycenter(n)
    a = karcher_mean(chart, lam)
    logs = [man.log(a, p) for p in chart.vertices]
    worst = 0.0
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            chord = logs[i] - logs[j]
            tangent_len = man.norm(chord)
            geodesic_len = chart.edge_lengths.lengths[i, j]
            worst = max(worst, abs(geodesic_len - tangent_len) / geodesic_len)
    return EdgeLengthReport(h=chart.h, max_rel_gap=worst)


def edge_length_rate(family: SimplexFamily) -> tuple[list[EdgeLengthReport], SlopeFit]:
    reports = []
    for h in family.ladder:
        chart = generate_geodesic_simplex(family.manifold, family.center,
                                          family.directions, h)
        reports.append(check_edge_length_comparison(chart))
    fit = fit_slope([r.h for r in reports], [r.max_rel_gap for r in reports])
    return reports, fit
