#!/usr/bin/env python3
"""Solve the model Poisson problem (div grad) u = -2z on icosphere meshes
of the unit sphere and print the error decay; the exact solution is u = z."""

import numpy as np

from karcher.fem import poisson_ladder
from karcher.harness import fit_slope
from karcher.manifolds import Sphere


def main():
    sphere = Sphere(2)
    records = poisson_ladder(
        sphere, (1, 2, 3, 4),
        f=lambda c: -2.0 * c[2],
        u_exact=lambda c: c[2],
        grad_u_exact=lambda c: np.array([0.0, 0.0, 1.0]) - c[2] * c,
        mode="flat")
    print(f"{'level':>5} {'h':>9} {'dof':>6} {'L2 error':>11} {'H1 error':>11}")
    for r in records:
        print(f"{r['level']:>5} {r['h']:>9.5f} {r['dof']:>6} "
              f"{r['l2_error']:>11.4e} {r['h1_error']:>11.4e}")
    hs = [r["h"] for r in records]
    print(f"H1 slope: {fit_slope(hs, [r['h1_error'] for r in records]).slope:.3f}")
    print(f"L2 slope: {fit_slope(hs, [r['l2_error'] for r in records]).slope:.3f}")


if __name__ == "__main__":
    main()
