"""Barycentric coordinates through the Riemannian center of mass.

A weight vector lambda is mapped to the minimizer of the weighted sum of
squared geodesic distances to the chart's vertices.  The first and second
derivatives of that map follow from differentiating the stationarity
condition: with sigma(v) = sum v^i log_a(p_i) and A(V) the lambda-convex
combination of squared-distance Hessians, the differential solves
A(dx(v)) = sigma(v), and the Hessian of the map solves a similar linear
system driven by second derivatives of the distance functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import MeanSolverError
from .flat_simplex import (BarycentricWeight, EdgeLengthSystem, FlatMetric,
                           SimplexTangent, flat_metric_from_lengths)
from .manifolds import Manifold, ManifoldPoint, TangentVector


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the center-of-mass fixed-point iteration."""

    grad_tol: float
    max_iters: int = 100
    step_damping: float = 1.0

    def __post_init__(self):
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 < self.step_damping <= 1.0:
            raise ValueError("step_damping must lie in (0, 1]")


class KarcherChart:
    """n+1 manifold vertices plus solver configuration.

    Construction computes the geodesic edge lengths (or reuses a table
    computed elsewhere, so mesh edges are measured exactly once), derives
    the induced flat simplex metric, and verifies that all pairwise
    distances stay below the manifold's convexity radius.
    """

    def __init__(self, manifold: Manifold, vertices, solver: SolverConfig | None = None,
                 edge_lengths: EdgeLengthSystem | None = None):
        self.manifold = manifold
        self.vertices = tuple(vertices)
        self.n = len(self.vertices) - 1
        if self.n < 1:
            raise ValueError("need at least two vertices")
        if edge_lengths is None:
            n1 = self.n + 1
            table = np.zeros((n1, n1))
            for i in range(n1):
                for j in range(i + 1, n1):
                    table[i, j] = table[j, i] = manifold.dist(
                        self.vertices[i], self.vertices[j])
            edge_lengths = EdgeLengthSystem(table)
        self.edge_lengths = edge_lengths
        self.h = edge_lengths.max_length
        # A vertex set of diameter h lies in a ball of radius h around any
        # vertex; h beyond the convexity radius forfeits uniqueness.
        if self.h > manifold.bounds.convexity_radius * (1.0 + 1e-12):
            raise ValueError(
                "vertex separation exceeds the convexity radius; "
                "the center of mass may not be unique")
        self.flat_metric: FlatMetric = flat_metric_from_lengths(edge_lengths)
        self.solver = solver if solver is not None else SolverConfig(
            grad_tol=1e-12 * self.h)


@dataclass(frozen=True, eq=False)
class ChartJet:
    """Value, differential and (optionally) Hessian of the coordinate map
    at one weight vector.  Columns of ``dx_matrix`` are the images of the
    tangent basis e_k - e_0."""

    point: ManifoldPoint
    dx_matrix: np.ndarray                 # (coord_dim, n)
    nabla_dx_tensor: np.ndarray | None    # (n, n, coord_dim), symmetric in (k, l)

    def dx(self, v: SimplexTangent) -> TangentVector:
        return TangentVector(self.point, self.dx_matrix @ v.reduced())

    def nabla_dx(self, v: SimplexTangent, w: SimplexTangent) -> TangentVector:
        if self.nabla_dx_tensor is None:
            raise ValueError("jet was built without second derivatives")
        comps = np.einsum("klc,k,l->c", self.nabla_dx_tensor,
                          v.reduced(), w.reduced())
        return TangentVector(self.point, comps)


def energy(chart: KarcherChart, a: ManifoldPoint, lam: BarycentricWeight) -> float:
    """Weighted sum of squared geodesic distances to the vertices."""
    man = chart.manifold
    total = 0.0
    for li, p in zip(lam.values, chart.vertices):
        if li != 0.0:
            total += li * man.dist(a, p) ** 2
    return total


def grad_field(chart: KarcherChart, a: ManifoldPoint,
               lam: BarycentricWeight) -> TangentVector:
    """Half the gradient of the energy in its first argument, which is
    minus the lambda-weighted sum of logarithms toward the vertices."""
    man = chart.manifold
    comps = np.zeros(man.coord_dim)
    for li, p in zip(lam.values, chart.vertices):
        if li != 0.0:
            comps -= li * man.log(a, p).components
    return TangentVector(a, comps)


def _initial_guess(chart: KarcherChart, lam: BarycentricWeight) -> ManifoldPoint:
    # Tangent-space average seen from vertex 0: exact in flat space.
    man = chart.manifold
    p0 = chart.vertices[0]
    comps = np.zeros(man.coord_dim)
    for li, p in zip(lam.values[1:], chart.vertices[1:]):
        if li != 0.0:
            comps += li * man.log(p0, p).components
    return man.exp(p0, TangentVector(p0, comps))


def karcher_mean(chart: KarcherChart, lam: BarycentricWeight,
                 trace: list | None = None) -> ManifoldPoint:
    """Damped fixed-point iteration a <- exp_a(-damping * F(a, lambda)).

    Near the mean the update is a contraction with rate of order C0 h^2,
    so a handful of iterations reaches gradient norms near roundoff.
    """
    man = chart.manifold
    cfg = chart.solver
    conv_radius = man.bounds.convexity_radius
    a = _initial_guess(chart, lam)
    if trace is not None:
        trace.append(a)
    for _ in range(cfg.max_iters):
        comps = np.zeros(man.coord_dim)
        max_dist = 0.0
        for li, p in zip(lam.values, chart.vertices):
            log_ap = man.log(a, p)
            max_dist = max(max_dist, man.norm(log_ap))
            if li != 0.0:
                comps -= li * log_ap.components
        if max_dist > conv_radius * (1.0 + 1e-9):
            raise MeanSolverError("iterate left the convex ball")
        F = TangentVector(a, comps)
        if man.norm(F) <= cfg.grad_tol:
            return a
        a = man.exp(a, -cfg.step_damping * F)
        if trace is not None:
            trace.append(a)
    raise MeanSolverError(
        f"no convergence to grad_tol={cfg.grad_tol} in {cfg.max_iters} iterations")


def sigma(chart: KarcherChart, lam: BarycentricWeight, v: SimplexTangent,
          at: ManifoldPoint | None = None) -> TangentVector:
    """sum_i v^i log_a(p_i) at a = x(lambda); the flat-model differential."""
    man = chart.manifold
    a = at if at is not None else karcher_mean(chart, lam)
    comps = np.zeros(man.coord_dim)
    for vi, p in zip(v.v, chart.vertices):
        if vi != 0.0:
            comps += vi * man.log(a, p).components
    return TangentVector(a, comps)


def a_operator(chart: KarcherChart, lam: BarycentricWeight,
               V: TangentVector) -> TangentVector:
    """lambda-weighted combination of squared-distance Hessians applied to
    V at V's base point; close to the identity for small charts."""
    man = chart.manifold
    a = V.base
    comps = np.zeros(man.coord_dim)
    for li, p in zip(lam.values, chart.vertices):
        if li != 0.0:
            comps += li * man.hess_half_dist_sq(p, a, V).components
    return TangentVector(a, comps)


def _assemble_linear_data(chart: KarcherChart, lam: BarycentricWeight,
                          a: ManifoldPoint):
    """Orthonormal tangent basis, the matrix of A in it, and the sigma
    images of the simplex basis directions."""
    man = chart.manifold
    basis = man.tangent_basis(a)
    m = len(basis)
    logs = [man.log(a, p) for p in chart.vertices]
    a_mat = np.empty((m, m))
    for l, b in enumerate(basis):
        av = a_operator(chart, lam, b)
        for k in range(m):
            a_mat[k, l] = man._ip(a, av.components, basis[k].components)
    sig = np.empty((m, chart.n))
    for j in range(1, chart.n + 1):
        s = logs[j].components - logs[0].components
        for k in range(m):
            sig[k, j - 1] = man._ip(a, s, basis[k].components)
    return basis, a_mat, sig


def differential(chart: KarcherChart, lam: BarycentricWeight,
                 at: ManifoldPoint | None = None) -> ChartJet:
    """First derivative of the coordinate map: solves A dx(v) = sigma(v)
    for each basis direction."""
    man = chart.manifold
    a = at if at is not None else karcher_mean(chart, lam)
    basis, a_mat, sig = _assemble_linear_data(chart, lam, a)
    if np.linalg.cond(a_mat) > 1e12:
        raise MeanSolverError("Hessian combination A is numerically singular")
    dx_basis = np.linalg.solve(a_mat, sig)          # (m, n) in basis coords
    frame = np.array([b.components for b in basis])  # (m, coord_dim)
    return ChartJet(point=a, dx_matrix=frame.T @ dx_basis, nabla_dx_tensor=None)


def hessian(chart: KarcherChart, lam: BarycentricWeight,
            at: ManifoldPoint | None = None) -> ChartJet:
    """Jet with both dx and the symmetric bilinear map nabla dx.

    nabla dx(v, w) solves A(nabla dx) = -(sum w^i H_i V + sum v^i H_i W +
    sum lambda^i grad2 X_i (V, W)) with V = dx(v), W = dx(w).
    """
    man = chart.manifold
    n = chart.n
    a = at if at is not None else karcher_mean(chart, lam)
    basis, a_mat, sig = _assemble_linear_data(chart, lam, a)
    if np.linalg.cond(a_mat) > 1e12:
        raise MeanSolverError("Hessian combination A is numerically singular")
    lu = lu_factor(a_mat)
    dx_basis = lu_solve(lu, sig)
    frame = np.array([b.components for b in basis])
    dx_matrix = frame.T @ dx_basis

    dx_vecs = [TangentVector(a, dx_matrix[:, k]) for k in range(n)]
    # H[i][k] = Hessian term of vertex i applied to dx(e_k - e_0)
    hess_comp = np.empty((n + 1, n, man.coord_dim))
    for i, p in enumerate(chart.vertices):
        for k in range(n):
            hess_comp[i, k] = man.hess_half_dist_sq(p, a, dx_vecs[k]).components

    tensor = np.empty((n, n, man.coord_dim))
    for k in range(n):
        for l in range(k, n):
            rhs = (hess_comp[l + 1, k] - hess_comp[0, k]
                   + hess_comp[k + 1, l] - hess_comp[0, l])
            for i, (li, p) in enumerate(zip(lam.values, chart.vertices)):
                if li != 0.0:
                    rhs = rhs + li * man.second_deriv_X(
                        p, a, dx_vecs[k], dx_vecs[l]).components
            rhs_basis = np.array([man._ip(a, rhs, frame[j])
                                  for j in range(len(basis))])
            sol = lu_solve(lu, -rhs_basis)
            tensor[k, l] = frame.T @ sol
            tensor[l, k] = tensor[k, l]
    return ChartJet(point=a, dx_matrix=dx_matrix, nabla_dx_tensor=tensor)


def pullback_metric(chart: KarcherChart, lam: BarycentricWeight,
                    jet: ChartJet | None = None) -> np.ndarray:
    """Matrix of the pulled-back manifold metric at lambda in the simplex
    tangent basis e_k - e_0."""
    if jet is None:
        jet = differential(chart, lam)
    man = chart.manifold
    n = chart.n
    out = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            out[k, l] = out[l, k] = man._ip(
                jet.point, jet.dx_matrix[:, k], jet.dx_matrix[:, l])
    return out
