"""Runnable verification suite.

Each check exercises one property the library is expected to satisfy at
desk scale (convergence orders, exactness in flat space, oracle
agreement, solver quality) and returns a structured pass/fail result.
The checks are shared between the test suite and the ``karcher verify``
command.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import fem, flat_simplex, harness, jacobi
from .barycentric import (BarycentricWeight, KarcherChart, hessian,
                          karcher_mean, pullback_metric)
from .manifolds import EuclideanSpace, HyperbolicSpace, Sphere, TangentVector


@dataclass(frozen=True)
class CheckResult:
    criterion: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"criterion": self.criterion, "passed": self.passed,
                "detail": self.detail}


class AcceptanceContext:
    """Caches the expensive shared artifacts (ladder sweeps, FEM runs) so
    several criteria can reuse one computation; records wall times."""

    def __init__(self, seed: int = 0, fem_levels=(1, 2, 3, 4)):
        self.seed = seed
        self.fem_levels = tuple(fem_levels)
        self.timings: dict[str, float] = {}
        self._cache: dict[str, object] = {}

    def _get(self, key: str, builder):
        if key not in self._cache:
            start = time.perf_counter()
            self._cache[key] = builder()
            self.timings[key] = time.perf_counter() - start
        return self._cache[key]

    @property
    def sphere_family(self) -> harness.SimplexFamily:
        man = Sphere(2)
        center = man.point([0.0, 0.0, 1.0])
        return harness.equilateral_family(man, center, h0=0.2, levels=5)

    @property
    def hyperbolic_family(self) -> harness.SimplexFamily:
        man = HyperbolicSpace(2, curvature=1.0)
        center = man.point([0.0, 0.0, 1.0])
        return harness.equilateral_family(man, center, h0=0.2, levels=5)

    @property
    def sphere_sweep(self) -> harness.ConvergenceReport:
        return self._get("sphere_sweep",
                         lambda: harness.run_distortion_sweep(self.sphere_family))

    @property
    def hyperbolic_sweep(self) -> harness.ConvergenceReport:
        return self._get("hyperbolic_sweep",
                         lambda: harness.run_distortion_sweep(self.hyperbolic_family))

    @property
    def fem_records(self) -> list[dict]:
        def build():
            man = Sphere(2)
            return fem.poisson_ladder(
                man, self.fem_levels,
                f=lambda c: -2.0 * c[2],
                u_exact=lambda c: c[2],
                grad_u_exact=lambda c: np.array([0.0, 0.0, 1.0]) - c[2] * c,
                mode="flat")
        return self._get("fem_records", build)


def _slope_check(criterion: str, fit: harness.SlopeFit, target: float,
                 tol: float, elapsed: float | None = None,
                 limit: float | None = None, extra: str = "") -> CheckResult:
    ok = math.isfinite(fit.slope) and abs(fit.slope - target) <= tol
    detail = f"slope={fit.slope:.3f} target {target}+/-{tol}"
    if extra:
        detail += f"; {extra}"
    if elapsed is not None and limit is not None:
        ok = ok and elapsed <= limit
        detail += f"; elapsed {elapsed:.1f}s <= {limit:.0f}s"
    return CheckResult(criterion, ok, detail)


def check_metric_distortion_rate(ctx: AcceptanceContext) -> CheckResult:
    report = ctx.sphere_sweep
    return _slope_check("1 metric distortion rate (sphere)",
                        report.fitted_slopes["metric_gap"], 2.0, 0.25,
                        ctx.timings.get("sphere_sweep"), 60.0)


def check_connection_distortion_rate(ctx: AcceptanceContext) -> CheckResult:
    report = ctx.sphere_sweep
    return _slope_check("2 connection distortion rate (sphere)",
                        report.fitted_slopes["connection_gap"], 1.0, 0.25,
                        ctx.timings.get("sphere_sweep"), 120.0)


def check_dx_sigma_rate(ctx: AcceptanceContext) -> CheckResult:
    s_fit = ctx.sphere_sweep.fitted_slopes["dx_sigma_gap"]
    h_fit = ctx.hyperbolic_sweep.fitted_slopes["dx_sigma_gap"]
    ok = (abs(s_fit.slope - 2.0) <= 0.25) and (abs(h_fit.slope - 2.0) <= 0.3)
    detail = (f"sphere slope={s_fit.slope:.3f} (2.0+/-0.25), "
              f"hyperbolic slope={h_fit.slope:.3f} (2.0+/-0.3)")
    return CheckResult("3 differential vs flat model rate", ok, detail)


def check_nabla_dx_rate(ctx: AcceptanceContext) -> CheckResult:
    return _slope_check("4 second derivative rate (sphere)",
                        ctx.sphere_sweep.fitted_slopes["nabla_dx"], 1.0, 0.25)


def check_flat_space_exactness(ctx: AcceptanceContext) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(ctx.seed)
    man = EuclideanSpace(3)
    worst = 0.0
    for _ in range(3):
        pts = rng.uniform(-1.0, 1.0, size=(4, 3))
        vertices = [man.point(p) for p in pts]
        chart = KarcherChart(man, vertices)
        for _ in range(4):
            w = rng.dirichlet(np.ones(4))
            lam = BarycentricWeight(w)
            mean = karcher_mean(chart, lam)
            worst = max(worst, float(np.max(np.abs(
                mean.coords - w @ pts))))
            jet = hessian(chart, lam)
            xg = pullback_metric(chart, lam, jet=jet)
            worst = max(worst, float(np.max(np.abs(xg - chart.flat_metric.G))))
            worst = max(worst, float(np.max(np.abs(jet.nabla_dx_tensor))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed <= 1.0
    return CheckResult("5 flat space exactness", ok,
                       f"max deviation {worst:.2e} <= 1e-10; "
                       f"elapsed {elapsed:.2f}s <= 1s")


def check_edge_and_submanifold(ctx: AcceptanceContext) -> CheckResult:
    man = Sphere(2)
    center = man.point([0.0, 0.0, 1.0])
    family = ctx.sphere_family
    chart = harness.generate_geodesic_simplex(man, center, family.directions, 0.2)
    tol_edge = 10.0 * chart.solver.grad_tol
    worst_edge = 0.0
    for (i, j) in ((0, 1), (1, 2), (0, 2)):
        gamma = man.geodesic_between(chart.vertices[i], chart.vertices[j])
        for t in (0.25, 0.5, 0.75):
            lam_v = np.zeros(3)
            lam_v[i] = 1.0 - t
            lam_v[j] = t
            x = karcher_mean(chart, BarycentricWeight(lam_v))
            worst_edge = max(worst_edge,
                             man.dist(x, gamma.point(t * gamma.length)))

    # Vertices on the equator: a totally geodesic circle; the mean must
    # stay on it for every weight.
    rng = np.random.default_rng(ctx.seed)
    angles = np.array([0.0, 0.25, 0.55])
    verts = [man.point([math.cos(a), math.sin(a), 0.0]) for a in angles]
    circle_chart = KarcherChart(man, verts)
    worst_plane = 0.0
    for _ in range(10):
        lam = BarycentricWeight(rng.dirichlet(np.ones(3)))
        x = karcher_mean(circle_chart, lam)
        worst_plane = max(worst_plane, abs(float(x.coords[2])))
    ok = worst_edge <= tol_edge and worst_plane <= 1e-9
    return CheckResult(
        "6 edge and submanifold properties", ok,
        f"edge deviation {worst_edge:.2e} <= {tol_edge:.1e}; "
        f"great-circle deviation {worst_plane:.2e} <= 1e-9")


def check_jacobi_oracle(ctx: AcceptanceContext) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    cases = 0
    for man in (Sphere(2), HyperbolicSpace(2, curvature=1.0)):
        for _ in range(100):
            p = _random_point(man, rng)
            direction = _random_tangent(man, p, rng)
            tau = float(rng.uniform(0.05, 1.0))
            gamma = man.geodesic_from(p, direction, length=tau)
            q = gamma.point(tau)
            V = _random_tangent(man, q, rng, unit=False)
            jdot_tau, _ = jacobi.solve_bvp(jacobi.JacobiBVP(gamma, V))
            via_bvp = tau * jdot_tau.components
            closed = man.hess_half_dist_sq(p, q, V).components
            err = TangentVector(q, via_bvp - closed)
            worst = max(worst, man.norm(err))
            cases += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed <= 10.0
    return CheckResult(
        "7 Jacobi solver vs closed forms", ok,
        f"{cases} cases, max gap {worst:.2e} <= 1e-8; "
        f"elapsed {elapsed:.1f}s <= 10s")


def check_ode_bound(ctx: AcceptanceContext) -> CheckResult:
    rng = np.random.default_rng(ctx.seed)
    failures = 0
    worst_ratio = 0.0
    for _ in range(50):
        m = 3
        tau = float(rng.uniform(0.3, 2.0))
        a0 = rng.normal(size=(m, m))
        a1 = rng.normal(size=(m, m))
        target = 0.9 / tau ** 2
        nrm = max(np.linalg.norm(a0, 2) + np.linalg.norm(a1, 2), 1e-12)
        a0 *= target / nrm
        a1 *= target / nrm
        b0 = rng.normal(size=m)
        b1 = rng.normal(size=m)
        omega = 2.0 * math.pi / tau

        def A_fn(t, a0=a0, a1=a1, omega=omega):
            return a0 + math.sin(omega * t) * a1

        def B_fn(t, b0=b0, b1=b1, omega=omega):
            return b0 + math.cos(omega * t) * b1

        report = jacobi.ode_bound_check(A_fn, B_fn, tau)
        worst_ratio = max(worst_ratio, report.max_Udot / report.bound)
        if not report.passed:
            failures += 1
    ok = failures == 0
    return CheckResult("8 two-point ODE derivative bound", ok,
                       f"50 trials, failures={failures}, "
                       f"worst max|U'|/(3 max|B| tau)={worst_ratio:.3f}")


def check_flat_simplex_suite(ctx: AcceptanceContext) -> CheckResult:
    rng = np.random.default_rng(ctx.seed)
    worst_vol = 0.0
    count = 0
    while count < 200:
        n = int(rng.integers(2, 5))
        pts = rng.uniform(-1.0, 1.0, size=(n + 1, n))
        gm = flat_simplex.flat_metric_from_lengths(
            flat_simplex.EdgeLengthSystem.from_points(pts))
        if not gm.realizable:
            continue
        v_cm = flat_simplex.volume_from_cayley_menger(gm.E)
        v_gram = flat_simplex.volume_from_gram(gm.G)
        worst_vol = max(worst_vol, abs(v_cm - v_gram) / max(v_cm, v_gram))
        count += 1

    eig_ok = True
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 4))
        pts = rng.uniform(-1.0, 1.0, size=(n + 1, n))
        system = flat_simplex.EdgeLengthSystem.from_points(pts)
        gm = flat_simplex.flat_metric_from_lengths(system)
        if not gm.realizable:
            continue
        try:
            flat_simplex.gram_eigen_bounds(gm, system.max_length)
        except ArithmeticError:
            eig_ok = False
        checked += 1

    equilateral = flat_simplex.flat_metric_from_lengths(
        flat_simplex.EdgeLengthSystem(np.array([[0.0, 1, 1], [1, 0, 1], [1, 1, 0.0]])))
    theta = flat_simplex.fullness(equilateral, 1.0)
    theta_gap = abs(theta - math.sqrt(3.0) / 2.0)

    ok = worst_vol <= 1e-10 and eig_ok and theta_gap <= 1e-12
    return CheckResult(
        "9 flat simplex suite", ok,
        f"volume route gap {worst_vol:.2e} <= 1e-10 (200 systems); "
        f"eigen containment {'ok' if eig_ok else 'VIOLATED'} (100 draws); "
        f"equilateral fullness gap {theta_gap:.2e} <= 1e-12")


def check_fem_poisson(ctx: AcceptanceContext) -> CheckResult:
    records = ctx.fem_records
    elapsed = ctx.timings.get("fem_records", 0.0)
    hs = [r["h"] for r in records]
    h1 = [r["h1_error"] for r in records]
    l2 = [r["l2_error"] for r in records]
    fit = harness.fit_slope(hs, h1)
    decreasing = all(b < a for a, b in zip(l2, l2[1:]))
    ok = fit.slope >= 0.8 and decreasing and elapsed <= 120.0
    return CheckResult(
        "10 FEM Poisson convergence", ok,
        f"H1 slope={fit.slope:.3f} >= 0.8; L2 errors "
        f"{'strictly decreasing' if decreasing else 'NOT decreasing'}; "
        f"elapsed {elapsed:.1f}s <= 120s")


def check_edge_length_rate(ctx: AcceptanceContext) -> CheckResult:
    _, fit = harness.edge_length_rate(ctx.sphere_family)
    return _slope_check("11 edge length comparison rate",
                        fit, 2.0, 0.25)


def _random_point(man, rng):
    if isinstance(man, Sphere):
        v = rng.normal(size=man.coord_dim)
        return man.point(man.radius * v / np.linalg.norm(v))
    if isinstance(man, HyperbolicSpace):
        x = rng.normal(size=man.dim) * 0.5
        r = man.radius
        last = math.sqrt(r ** 2 + float(x @ x))
        return man.point(np.concatenate([x, [last]]))
    return man.point(rng.normal(size=man.coord_dim))


def _random_tangent(man, p, rng, unit: bool = True):
    basis = man.tangent_basis(p)
    coeffs = rng.normal(size=len(basis))
    vec = basis[0] * coeffs[0]
    for b, c in zip(basis[1:], coeffs[1:]):
        vec = vec + b * c
    if unit:
        return vec * (1.0 / man.norm(vec))
    return vec


CRITERIA = {
    "1": check_metric_distortion_rate,
    "2": check_connection_distortion_rate,
    "3": check_dx_sigma_rate,
    "4": check_nabla_dx_rate,
    "5": check_flat_space_exactness,
    "6": check_edge_and_submanifold,
    "7": check_jacobi_oracle,
    "8": check_ode_bound,
    "9": check_flat_simplex_suite,
    "10": check_fem_poisson,
    "11": check_edge_length_rate,
}

SUITES = {
    "distortion": ("1", "2", "3", "4", "11"),
    "karcher": ("5", "6"),
    "jacobi": ("7", "8"),
    "flat-simplex": ("9",),
    "fem": ("10",),
    "all": tuple(CRITERIA),
}


def run_suite(name: str, ctx: AcceptanceContext | None = None) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    ctx = ctx if ctx is not None else AcceptanceContext()
    return [CRITERIA[c](ctx) for c in SUITES[name]]
