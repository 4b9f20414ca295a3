import math

import numpy as np
import pytest

from karcher.errors import TriangulationError
from karcher.fem import (assemble, build_triangulation, error_norms,
                         export_off, poisson_ladder, solve_poisson)
from karcher.flat_simplex import fullness


def f_eigen(c):
    return -2.0 * c[2]


def u_eigen(c):
    return c[2]


def grad_u_eigen(c):
    return np.array([0.0, 0.0, 1.0]) - c[2] * c


@pytest.fixture(scope="module")
def tri1(sphere):
    return build_triangulation(sphere, 1)


@pytest.fixture(scope="module")
def sys1(tri1):
    return assemble(tri1, f_eigen, mode="flat")


# -- triangulation -------------------------------------------------------------

def test_icosahedron_counts(sphere):
    tri = build_triangulation(sphere, 0)
    assert tri.num_vertices == 12
    assert tri.num_triangles == 20


def test_level1_counts(tri1):
    assert tri1.num_vertices == 42
    assert tri1.num_triangles == 80


def test_h_roughly_halves_per_level(sphere, tri1):
    tri2 = build_triangulation(sphere, 2)
    assert tri2.h == pytest.approx(tri1.h / 2.0, rel=0.1)


def test_level2_fullness(sphere):
    tri = build_triangulation(sphere, 2)
    thetas = [fullness(tri.flat_metrics[t], tri.charts[t].h)
              for t in range(tri.num_triangles)]
    # measured minimum is 0.6971 at this level
    assert min(thetas) >= 0.69


def test_fullness_threshold_error(sphere):
    with pytest.raises(TriangulationError):
        build_triangulation(sphere, 1, min_fullness=0.95)


def test_level_validation(sphere):
    with pytest.raises(ValueError):
        build_triangulation(sphere, -1)


def test_shared_edges_single_length(tri1):
    # Both triangles adjacent to an edge carry the same stored length.
    seen = {}
    for t, tri_idx in enumerate(tri1.triangles):
        table = tri1.charts[t].edge_lengths.lengths
        local = ((0, 1), (0, 2), (1, 2))
        for (a_loc, b_loc) in local:
            key = tuple(sorted((tri_idx[a_loc], tri_idx[b_loc])))
            val = table[a_loc, b_loc]
            if key in seen:
                assert seen[key] == val  # exact float equality
            else:
                seen[key] = val
    assert len(seen) == 120  # level-1 edge count


# -- assembly ------------------------------------------------------------------

def test_zero_load_gives_zero_solution(tri1):
    system = assemble(tri1, lambda c: 0.0, mode="flat")
    assert np.max(np.abs(system.load)) == 0.0
    assert np.max(np.abs(solve_poisson(system))) == 0.0


def test_stiffness_row_sums_vanish(sys1):
    ones = np.ones(sys1.stiffness.shape[0])
    assert np.max(np.abs(sys1.stiffness @ ones)) <= 1e-10
    # symmetric positive semidefinite
    dense = sys1.stiffness.toarray()
    assert np.max(np.abs(dense - dense.T)) <= 1e-12
    evals = np.linalg.eigvalsh(dense)
    assert evals.min() >= -1e-10


def test_mass_matrix_total_area(sphere, sys1):
    ones = np.ones(sys1.mass.shape[0])
    # flat per-triangle measure undershoots the sphere area by O(h^2)
    area1 = float(ones @ (sys1.mass @ ones))
    assert area1 == pytest.approx(4.0 * math.pi, rel=0.05)
    tri2 = build_triangulation(sphere, 2)
    sys2 = assemble(tri2, f_eigen, mode="flat")
    area2 = float(np.ones(sys2.mass.shape[0]) @ (sys2.mass @ np.ones(sys2.mass.shape[0])))
    gap1, gap2 = 4.0 * math.pi - area1, 4.0 * math.pi - area2
    assert 0.0 < gap2 < 0.35 * gap1  # deficit shrinks at second order


def test_assembly_modes_agree_to_second_order(sphere, tri1, sys1):
    sys1p = assemble(tri1, f_eigen, mode="pulled-back")
    tri2 = build_triangulation(sphere, 2)
    sys2 = assemble(tri2, f_eigen, mode="flat")
    sys2p = assemble(tri2, f_eigen, mode="pulled-back")

    def rel_gap(a, b):
        return (np.abs((a.stiffness - b.stiffness).toarray()).max()
                / np.abs(a.stiffness.toarray()).max())

    g1 = rel_gap(sys1, sys1p)
    g2 = rel_gap(sys2, sys2p)
    assert g1 <= 1.0 * tri1.h ** 2
    assert 0.15 <= g2 / g1 <= 0.45  # quarters when h halves


def test_unknown_mode_rejected(tri1):
    with pytest.raises(ValueError):
        assemble(tri1, f_eigen, mode="exotic")


# -- solve ----------------------------------------------------------------------

def test_solution_approximates_eigenfunction(tri1, sys1):
    u = solve_poisson(sys1)
    z = np.array([p.coords[2] for p in tri1.points])
    assert np.max(np.abs(u - z)) <= 0.05


def test_galerkin_residual_orthogonality(sys1):
    u = solve_poisson(sys1)
    b = -sys1.load
    b = b - b.mean()
    assert np.linalg.norm(sys1.stiffness @ u - b) <= 1e-10 * np.linalg.norm(b)


def test_solution_rotates_with_load(sphere, tri1):
    # The mesh is invariant under the cyclic coordinate rotation
    # R(x,y,z) = (y,z,x); rotating the load rotates the solution.
    coords = np.array([p.coords for p in tri1.points])
    u1 = solve_poisson(assemble(tri1, lambda c: -2.0 * c[2], mode="flat"))
    u2 = solve_poisson(assemble(tri1, lambda c: -2.0 * c[1], mode="flat"))
    rotated_back = coords[:, [2, 0, 1]]  # R^{-1} applied to every vertex
    perm = np.array([np.argmin(np.abs(coords - c).sum(axis=1))
                     for c in rotated_back])
    assert np.max(np.abs(coords[perm] - rotated_back)) <= 1e-12
    assert np.max(np.abs(u2 - u1[perm])) <= 1e-10


def test_dense_and_cg_paths_agree(sphere):
    # level 2 has 162 dof (dense path); compare against CG by lowering the
    # dense cutoff through a level-3 run would be slow, so instead check
    # the CG path on level 3 reaches the documented residual.
    tri3 = build_triangulation(sphere, 3)
    system = assemble(tri3, f_eigen, mode="flat")
    u = solve_poisson(system)  # 642 dof: CG path
    b = -system.load
    b = b - b.mean()
    assert np.linalg.norm(system.stiffness @ u - b) <= 1e-10 * np.linalg.norm(b)


# -- error norms ---------------------------------------------------------------

def test_interpolant_h1_error_first_order(sphere):
    tri = build_triangulation(sphere, 3)
    z = np.array([p.coords[2] for p in tri.points])
    l2, h1 = error_norms(tri, z, u_eigen, grad_u_eigen)
    assert h1 <= 1.0 * tri.h
    assert l2 <= h1


def test_constant_reproduced_exactly(tri1):
    vals = np.full(tri1.num_vertices, 0.7)
    l2, h1 = error_norms(tri1, vals, lambda c: 0.7, lambda c: np.zeros(3))
    assert l2 <= 1e-12
    assert h1 <= 1e-12


def test_poisson_ladder_rates(sphere):
    records = poisson_ladder(sphere, (1, 2, 3), f_eigen, u_eigen,
                             grad_u_eigen, mode="flat")
    l2 = [r["l2_error"] for r in records]
    h1 = [r["h1_error"] for r in records]
    assert all(b < a for a, b in zip(l2, l2[1:]))
    assert all(b < a for a, b in zip(h1, h1[1:]))
    # dof bookkeeping
    assert [r["dof"] for r in records] == [42, 162, 642]


def test_dirichlet_energy_increases_to_continuum(sphere):
    # Soft check: discrete energy of the solution climbs toward the
    # continuum value 8 pi / 3 under refinement.
    energies = []
    for level in (1, 2, 3):
        tri = build_triangulation(sphere, level)
        system = assemble(tri, f_eigen, mode="flat")
        u = solve_poisson(system)
        energies.append(float(u @ (system.stiffness @ u)))
    assert all(b >= a - 1e-9 for a, b in zip(energies, energies[1:]))
    assert energies[-1] <= 8.0 * math.pi / 3.0


def test_export_off_roundtrip(tmp_path, tri1):
    path = tmp_path / "mesh.off"
    export_off(tri1, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    nv, nt, _ = (int(x) for x in lines[1].split())
    assert (nv, nt) == (42, 80)
    first = np.array([float(x) for x in lines[2].split()])
    assert np.allclose(first, tri1.points[0].coords)
    face = lines[2 + nv].split()
    assert face[0] == "3" and len(face) == 4
