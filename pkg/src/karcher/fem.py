"""Piecewise-linear Galerkin Poisson solver on a center-of-mass
triangulation of the sphere.

The sphere is meshed by subdividing an icosahedron and projecting to the
surface; each triangle carries the flat metric induced by its geodesic
edge lengths together with a coordinate chart whose quadrature nodes are
weighted centers of mass.  Stiffness can be assembled either from the
constant per-triangle flat metric or from the pulled-back metric sampled
at quadrature nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .barycentric import (BarycentricWeight, ChartJet, KarcherChart,
                          SolverConfig, differential, pullback_metric)
from .errors import LinearSolverError, TriangulationError
from .flat_simplex import EdgeLengthSystem, FlatMetric, flat_metric_from_lengths, fullness
from .manifolds import Sphere

# Icosahedron vertices on the unit sphere; faces are derived from vertex
# adjacency (chord length 2 before normalization) and wound outward.
_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
    (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
    (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, 1), (-_PHI, 0, -1),
], dtype=float) / math.sqrt(1.0 + _PHI ** 2)


def _icosahedron_faces() -> np.ndarray:
    dots = _ICO_VERTS @ _ICO_VERTS.T
    adjacent = dots > 0.4  # neighbors have dot 1/sqrt(5), others <= 0
    faces = []
    for i in range(12):
        for j in range(i + 1, 12):
            if not adjacent[i, j]:
                continue
            for k in range(j + 1, 12):
                if adjacent[i, k] and adjacent[j, k]:
                    normal = np.cross(_ICO_VERTS[j] - _ICO_VERTS[i],
                                      _ICO_VERTS[k] - _ICO_VERTS[i])
                    if normal @ _ICO_VERTS[i] > 0:
                        faces.append((i, j, k))
                    else:
                        faces.append((i, k, j))
    return np.array(faces, dtype=int)


_ICO_FACES = _icosahedron_faces()

# Order-2 quadrature on the unit triangle: interior points, weights 1/3.
_QUAD_UV = np.array([
    (2.0 / 3.0, 1.0 / 6.0),
    (1.0 / 6.0, 2.0 / 3.0),
    (1.0 / 6.0, 1.0 / 6.0),
])
_QUAD_W = np.full(3, 1.0 / 3.0)
_REF_AREA = 0.5

# P1 shape functions on the unit triangle and their constant gradients.
_DPHI = np.array([(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)])


def _phi_values(u: float, v: float) -> np.ndarray:
    return np.array([1.0 - u - v, u, v])


def icosphere(level: int, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Vertex coordinates and faces of the level-times subdivided
    icosahedron projected to the sphere of the given radius."""
    verts = [row for row in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return radius * np.array(verts), np.array(faces, dtype=int)


class KarcherTriangulation:
    """Global sphere mesh with per-triangle flat metrics and charts."""

    def __init__(self, manifold: Sphere, points, triangles: np.ndarray,
                 min_fullness: float = 0.5, solver: SolverConfig | None = None):
        self.manifold = manifold
        self.points = list(points)
        self.triangles = np.asarray(triangles, dtype=int)
        # Geodesic edge lengths, each undirected edge measured exactly once
        # so both adjacent triangles see the same number.
        lengths: dict[tuple[int, int], float] = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (a, b) if a < b else (b, a)
                if key not in lengths:
                    lengths[key] = manifold.dist(self.points[a], self.points[b])
        self.edge_lengths = lengths
        self.h = max(lengths.values())

        self.flat_metrics: list[FlatMetric] = []
        self.charts: list[KarcherChart] = []
        for tri in self.triangles:
            table = np.zeros((3, 3))
            for u, (a, b) in enumerate(((tri[0], tri[1]), (tri[0], tri[2]),
                                        (tri[1], tri[2]))):
                key = (a, b) if a < b else (b, a)
                i, j = ((0, 1), (0, 2), (1, 2))[u]
                table[i, j] = table[j, i] = lengths[key]
            system = EdgeLengthSystem(table)
            gm = flat_metric_from_lengths(system)
            if not gm.realizable:
                raise TriangulationError(f"triangle {tri} has no flat realization")
            theta = fullness(gm, system.max_length)
            if theta < min_fullness:
                raise TriangulationError(
                    f"triangle {tri} fullness {theta:.3f} below {min_fullness}")
            self.flat_metrics.append(gm)
            self.charts.append(KarcherChart(
                manifold, tuple(self.points[i] for i in tri),
                solver=solver, edge_lengths=system))
        self._quad_cache: dict[int, list[tuple[BarycentricWeight, ChartJet]]] = {}

    @property
    def num_vertices(self) -> int:
        return len(self.points)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def quad_data(self, t: int) -> list[tuple[BarycentricWeight, ChartJet]]:
        """Chart jets at the quadrature nodes of triangle t (cached)."""
        if t not in self._quad_cache:
            chart = self.charts[t]
            data = []
            for u, v in _QUAD_UV:
                lam = BarycentricWeight(np.array([1.0 - u - v, u, v]))
                data.append((lam, differential(chart, lam)))
            self._quad_cache[t] = data
        return self._quad_cache[t]


def build_triangulation(manifold: Sphere, subdivision_level: int,
                        min_fullness: float = 0.5,
                        solver: SolverConfig | None = None) -> KarcherTriangulation:
    """Icosahedral mesh of the sphere, subdivided 4-to-1 per level."""
    if not isinstance(manifold, Sphere):
        raise ValueError("global triangulations are provided for spheres only")
    if subdivision_level < 0:
        raise ValueError("subdivision level must be nonnegative")
    coords, faces = icosphere(subdivision_level, manifold.radius)
    points = [manifold.point(c) for c in coords]
    return KarcherTriangulation(manifold, points, faces,
                                min_fullness=min_fullness, solver=solver)


@dataclass(frozen=True, eq=False)
class FemSystem:
    """Assembled Galerkin system for one triangulation and load."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    load: np.ndarray
    mode: str


def assemble(tri: KarcherTriangulation, f, mode: str = "flat") -> FemSystem:
    """Assemble stiffness, mass and load.

    ``mode="flat"`` uses the constant per-triangle edge-length metric;
    ``mode="pulled-back"`` evaluates the pulled-back metric at the
    quadrature nodes.  The load integrates f composed with the chart map
    in both modes.
    """
    if mode not in ("flat", "pulled-back"):
        raise ValueError(f"unknown assembly mode {mode!r}")
    nv = tri.num_vertices
    rows, cols, k_vals, m_vals = [], [], [], []
    load = np.zeros(nv)

    for t in range(tri.num_triangles):
        idx = tri.triangles[t]
        gm = tri.flat_metrics[t]
        data = tri.quad_data(t)

        k_loc = np.zeros((3, 3))
        m_loc = np.zeros((3, 3))
        f_loc = np.zeros(3)
        if mode == "flat":
            ginv = np.linalg.inv(gm.G)
            root = math.sqrt(np.linalg.det(gm.G))
            k_loc = _REF_AREA * root * (_DPHI @ ginv @ _DPHI.T)
            for (uq, vq), wq, (lam, jet) in zip(_QUAD_UV, _QUAD_W, data):
                phi = _phi_values(uq, vq)
                fval = f(jet.point.coords)
                f_loc += _REF_AREA * wq * root * fval * phi
                m_loc += _REF_AREA * wq * root * np.outer(phi, phi)
        else:
            chart = tri.charts[t]
            for (uq, vq), wq, (lam, jet) in zip(_QUAD_UV, _QUAD_W, data):
                mq = pullback_metric(chart, lam, jet=jet)
                root = math.sqrt(np.linalg.det(mq))
                minv = np.linalg.inv(mq)
                phi = _phi_values(uq, vq)
                k_loc += _REF_AREA * wq * root * (_DPHI @ minv @ _DPHI.T)
                m_loc += _REF_AREA * wq * root * np.outer(phi, phi)
                f_loc += _REF_AREA * wq * root * f(jet.point.coords) * phi

        load[idx] += f_loc
        for a in range(3):
            for b in range(3):
                rows.append(idx[a])
                cols.append(idx[b])
                k_vals.append(k_loc[a, b])
                m_vals.append(m_loc[a, b])

    shape = (nv, nv)
    stiffness = sp.coo_matrix((k_vals, (rows, cols)), shape=shape).tocsr()
    mass = sp.coo_matrix((m_vals, (rows, cols)), shape=shape).tocsr()
    return FemSystem(stiffness=stiffness, mass=mass, load=load, mode=mode)


_DENSE_CUTOFF = 500


def solve_poisson(system: FemSystem) -> np.ndarray:
    """Solve the discrete Poisson problem for the divergence-form
    Laplacian: stiffness u = -load on the complement of constants.

    The sign makes the solution of the weak problem match the strong
    equation (div grad) u = f; the returned vector has zero mass-weighted
    mean and relative residual at most 1e-10.
    """
    S = system.stiffness
    n = S.shape[0]
    ones = np.ones(n)
    b = -system.load
    b = b - ones * (b.sum() / n)      # compatibility on a closed surface

    if n < _DENSE_CUTOFF:
        dense = S.toarray() + (np.trace(S.toarray()) / n ** 2) * np.outer(ones, ones)
        u = np.linalg.solve(dense, b)
    else:
        diag = S.diagonal()

        def precondition(x):
            y = x / diag
            return y - ones * (y.sum() / n)

        M = spla.LinearOperator(S.shape, matvec=precondition)
        u, info = spla.cg(S, b, rtol=1e-12, atol=0.0, maxiter=10 * n, M=M)
        if info != 0:
            raise LinearSolverError(f"conjugate gradient stopped with info={info}")

    residual = np.linalg.norm(S @ u - b)
    scale = np.linalg.norm(b)
    if scale > 0 and residual > 1e-10 * scale:
        raise LinearSolverError(f"relative residual {residual / scale:.2e} too large")
    mass_row = system.mass @ ones
    u = u - ones * (mass_row @ u) / (mass_row @ ones)
    return u


def error_norms(tri: KarcherTriangulation, u_h: np.ndarray, u_exact,
                grad_u_exact) -> tuple[float, float]:
    """Quadrature L2 and H1 errors against a known solution.

    ``u_exact`` maps ambient coordinates to values; ``grad_u_exact`` maps
    them to the components of the surface gradient.  The H1 norm includes
    the L2 part.
    """
    man = tri.manifold
    l2_sq = 0.0
    semi_sq = 0.0
    for t in range(tri.num_triangles):
        idx = tri.triangles[t]
        chart = tri.charts[t]
        u_loc = u_h[idx]
        du = _DPHI.T @ u_loc                     # constant reduced differential
        for (uq, vq), wq, (lam, jet) in zip(_QUAD_UV, _QUAD_W, tri.quad_data(t)):
            mq = pullback_metric(chart, lam, jet=jet)
            root = math.sqrt(np.linalg.det(mq))
            coords = jet.point.coords
            e_val = float(_phi_values(uq, vq) @ u_loc) - u_exact(coords)
            gvec = np.asarray(grad_u_exact(coords), dtype=float)
            pulled = np.array([
                man._ip(jet.point, gvec, jet.dx_matrix[:, k]) for k in range(2)
            ])
            diff = du - pulled
            l2_sq += _REF_AREA * wq * root * e_val ** 2
            semi_sq += _REF_AREA * wq * root * float(diff @ np.linalg.solve(mq, diff))
    return math.sqrt(l2_sq), math.sqrt(l2_sq + semi_sq)


def export_off(tri: KarcherTriangulation, path: str):
    """Write the mesh as OFF text for external viewers."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("OFF\n")
        fh.write(f"{tri.num_vertices} {tri.num_triangles} 0\n")
        for p in tri.points:
            fh.write(" ".join(f"{c:.17g}" for c in p.coords) + "\n")
        for tri_idx in tri.triangles:
            fh.write("3 " + " ".join(str(int(i)) for i in tri_idx) + "\n")


def poisson_ladder(manifold: Sphere, levels, f, u_exact, grad_u_exact,
                   mode: str = "flat") -> list[dict]:
    """Solve the model problem on a sequence of refinement levels and
    report mesh size, degrees of freedom and both error norms."""
    records = []
    for level in levels:
        tri = build_triangulation(manifold, level)
        system = assemble(tri, f, mode=mode)
        u = solve_poisson(system)
        l2, h1 = error_norms(tri, u, u_exact, grad_u_exact)
        records.append({
            "level": int(level),
            "h": tri.h,
            "dof": tri.num_vertices,
            "l2_error": l2,
            "h1_error": h1,
        })
    return records
