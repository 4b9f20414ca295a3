"""Jacobi fields with two fixed values along a geodesic.

Solves J'' + R(J, T)T = 0 with J(0) = 0 and J(tau) = V by shooting in a
parallel orthonormal frame, where the equation becomes a linear ODE with
matrix-valued coefficient.  Also provides the second variation (the
s-derivative of the boundary derivative under a geodesic variation of the
endpoint) and a checker for the two-point ODE bound used to control it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from .errors import JacobiError
from .integrate import solve_ode
from .manifolds import Geodesic, TangentVector, _require_same_base


@dataclass(frozen=True, eq=False)
class JacobiBVP:
    """Boundary data: a geodesic from p to q and the field value at q."""

    geodesic: Geodesic
    end_value: TangentVector

    def __post_init__(self):
        man = self.geodesic.manifold
        tau = self.geodesic.length
        if tau <= 0.0:
            raise JacobiError("geodesic must have positive length")
        C0 = man.bounds.C0
        if C0 > 0.0 and tau >= math.pi / math.sqrt(C0) * (1.0 - 1e-12):
            raise JacobiError("length reaches the first conjugate point")
        _require_same_base(self.end_value,
                           self.geodesic.velocity(self.geodesic.length))

    @property
    def tau(self) -> float:
        return self.geodesic.length


@dataclass(frozen=True, eq=False)
class FrameField:
    """Parallel orthonormal frame along a geodesic, first vector tangent."""

    geodesic: Geodesic
    base_frame: np.ndarray                      # (m, coord_dim) at t = 0
    _eval: Callable[[float], np.ndarray] = field(repr=False)

    def __call__(self, t: float) -> np.ndarray:
        return self._eval(t)


def parallel_frame(gamma: Geodesic) -> FrameField:
    man = gamma.manifold
    p = gamma.start
    t0 = gamma.velocity(0.0)
    # Orthonormalize {T, tangent basis...} so the frame starts with the
    # geodesic tangent; curvature matrices then have a fixed zero row.
    candidates = [t0] + man.tangent_basis(p)
    frame0: list[np.ndarray] = []
    for cand in candidates:
        v = cand.components.copy()
        for b in frame0:
            v -= man._ip(p, v, b) * b
        n2 = man._ip(p, v, v)
        if n2 > 1e-14:
            frame0.append(v / math.sqrt(n2))
        if len(frame0) == man.dim:
            break
    base = np.array(frame0)
    vecs0 = [TangentVector(p, b) for b in base]
    evaluator = man.frame_field(gamma, vecs0)
    return FrameField(gamma, base, evaluator)


def _frame_curvature(gamma: Geodesic, frame: FrameField) -> Callable[[float], np.ndarray]:
    """t -> matrix of the Jacobi operator w -> R(w, T)T in the frame."""
    man = gamma.manifold
    m = man.dim
    K = man.constant_sectional_curvature
    if K is not None:
        # Parallel frame with e_0 = T: the operator is K on the normal
        # space and 0 on the tangent line, for every t.
        R = K * np.eye(m)
        R[0, 0] = 0.0
        return lambda t: R

    def R_of_t(t: float) -> np.ndarray:
        F = frame(t)
        pt = gamma.point(t)
        Tc = gamma.velocity(t).components
        R = np.empty((m, m))
        for b in range(m):
            rv = man.curvature_rt(pt, Tc, F[b])
            for a in range(m):
                R[a, b] = man._ip(pt, rv, F[a])
        return R

    return R_of_t


def solve_bvp(bvp: JacobiBVP) -> tuple[TangentVector, TangentVector]:
    """Return (J'(tau), J'(0)) for the field with J(0) = 0, J(tau) = V."""
    gamma = bvp.geodesic
    man = gamma.manifold
    m = man.dim
    tau = bvp.tau
    frame = parallel_frame(gamma)
    R_of_t = _frame_curvature(gamma, frame)

    def rhs(t, y):
        Y = y[: m * m].reshape(m, m)
        Yd = y[m * m:]
        acc = -(R_of_t(t) @ Y).ravel()
        return np.concatenate([Yd, acc])

    y0 = np.concatenate([np.zeros(m * m), np.eye(m).ravel()])
    sol = solve_ode(rhs, (0.0, tau), y0)
    phi = sol.y[: m * m, -1].reshape(m, m)
    phi_dot = sol.y[m * m:, -1].reshape(m, m)

    if np.linalg.cond(phi) > 1e12:
        raise JacobiError("shooting matrix is singular (conjugate point)")

    F_tau = frame(tau)
    q = gamma.point(tau)
    v_frame = np.array([man._ip(q, bvp.end_value.components, F_tau[a])
                        for a in range(m)])
    u0 = np.linalg.solve(phi, v_frame)
    jdot0 = TangentVector(gamma.start, frame.base_frame.T @ u0)
    jdot_tau = TangentVector(q, F_tau.T @ (phi_dot @ u0))
    return jdot_tau, jdot0


def integrate_jacobi(gamma: Geodesic, j0: TangentVector, jdot0: TangentVector,
                     ts: np.ndarray) -> tuple[list[TangentVector], list[TangentVector]]:
    """Propagate a Jacobi field with given initial value and derivative;
    returns (J(t), J'(t)) at the requested times."""
    man = gamma.manifold
    m = man.dim
    frame = parallel_frame(gamma)
    R_of_t = _frame_curvature(gamma, frame)

    p = gamma.start
    F0 = frame(0.0)
    y = np.array([man._ip(p, j0.components, F0[a]) for a in range(m)])
    yd = np.array([man._ip(p, jdot0.components, F0[a]) for a in range(m)])

    def rhs(t, state):
        return np.concatenate([state[m:], -(R_of_t(t) @ state[:m])])

    ts = np.asarray(ts, dtype=float)
    sol = solve_ode(rhs, (0.0, float(ts[-1])), np.concatenate([y, yd]),
                    dense_output=True)
    js, jdots = [], []
    for t in ts:
        state = sol.sol(t)
        F = frame(t)
        pt = gamma.point(t)
        js.append(TangentVector(pt, F.T @ state[:m]))
        jdots.append(TangentVector(pt, F.T @ state[m:]))
    return js, jdots


@dataclass(frozen=True)
class BoundaryDerivativeReport:
    tau: float
    deviation: float        # |tau J'(tau) - V|
    bound: float            # C0 tau^2 |V|
    ratio: float
    within_bound: bool


def boundary_derivative_estimate_check(bvp: JacobiBVP) -> BoundaryDerivativeReport:
    """Measure how far tau*J'(tau) is from the boundary value V; the gap is
    controlled by C0 tau^2 |V| with constant at most one on the model
    spaces."""
    man = bvp.geodesic.manifold
    C0 = man.bounds.C0
    tau = bvp.tau
    if C0 > 0.0 and tau >= math.pi / (2.0 * math.sqrt(C0)):
        raise JacobiError("estimate requires tau below half the conjugate length")
    jdot_tau, _ = solve_bvp(bvp)
    q = bvp.geodesic.point(tau)
    dev_vec = TangentVector(q, tau * jdot_tau.components - bvp.end_value.components)
    deviation = man.norm(dev_vec)
    bound = C0 * tau ** 2 * man.norm(bvp.end_value)
    if bound > 0.0:
        ratio = deviation / bound
        within = ratio <= 1.0
    else:
        ratio = 0.0
        within = deviation <= 1e-9
    return BoundaryDerivativeReport(tau, deviation, bound, ratio, within)


def second_variation(bvp: JacobiBVP, step: float = 1e-4) -> TangentVector:
    """tau * D_s J'(0, tau): Richardson-extrapolated central difference of
    the boundary derivative under the geodesic variation of the endpoint
    with initial speed V."""
    gamma = bvp.geodesic
    man = gamma.manifold
    p = gamma.start
    q = gamma.point(gamma.length)
    scale = man.norm(bvp.end_value)
    if scale == 0.0:
        return TangentVector(q, np.zeros(man.coord_dim))
    u_hat = bvp.end_value * (1.0 / scale)
    fwd = man.geodesic_from(q, u_hat, length=2.0 * step)
    bwd = man.geodesic_from(q, -1.0 * u_hat, length=2.0 * step)

    def boundary_derivative(geo: Geodesic, s: float, sign: float) -> TangentVector:
        endpoint = geo.point(s)
        vel = sign * geo.velocity(s)
        connecting = man.geodesic_between(p, endpoint)
        jdot_tau, _ = solve_bvp(JacobiBVP(connecting, vel))
        return connecting.length * jdot_tau

    def central(s: float) -> np.ndarray:
        hp = boundary_derivative(fwd, s, +1.0)
        hm = boundary_derivative(bwd, s, -1.0)
        a = man.parallel_transport(fwd, s, 0.0, hp).components
        b = man.parallel_transport(bwd, s, 0.0, hm).components
        return (a - b) / (2.0 * s)

    d1 = central(step)
    d2 = central(0.5 * step)
    return TangentVector(q, scale ** 2 * (4.0 * d2 - d1) / 3.0)


@dataclass(frozen=True)
class OdeBoundReport:
    tau: float
    max_A_norm: float
    max_B_norm: float
    max_Udot: float
    bound: float            # 3 * max|B| * tau
    passed: bool


def ode_bound_check(A_fn: Callable[[float], np.ndarray],
                    B_fn: Callable[[float], np.ndarray],
                    tau: float, n_samples: int = 200) -> OdeBoundReport:
    """Solve U'' = A(t) U + B(t), U(0) = U(tau) = 0 and test the derivative
    bound max|U'| <= 3 max|B| tau, valid whenever |A| tau^2 <= 1."""
    ts = np.linspace(0.0, tau, n_samples)
    a_max = max(float(np.linalg.norm(A_fn(t), 2)) for t in ts)
    b_max = max(float(np.linalg.norm(B_fn(t))) for t in ts)
    if a_max * tau ** 2 > 1.0 + 1e-9:
        raise ValueError("hypothesis |A| tau^2 <= 1 is violated")
    m = np.atleast_1d(B_fn(0.0)).size

    def rhs_particular(t, y):
        return np.concatenate([y[m:], A_fn(t) @ y[:m] + B_fn(t)])

    def rhs_fundamental(t, y):
        Y = y[: m * m].reshape(m, m)
        return np.concatenate([y[m * m:], (A_fn(t) @ Y).ravel()])

    sol_p = solve_ode(rhs_particular, (0.0, tau), np.zeros(2 * m),
                      dense_output=True)
    y0 = np.concatenate([np.zeros(m * m), np.eye(m).ravel()])
    sol_f = solve_ode(rhs_fundamental, (0.0, tau), y0, dense_output=True)

    phi_tau = sol_f.sol(tau)[: m * m].reshape(m, m)
    up_tau = sol_p.sol(tau)[:m]
    c = np.linalg.solve(phi_tau, -up_tau)

    max_udot = 0.0
    for t in ts:
        yp = sol_p.sol(t)
        yf = sol_f.sol(t)
        udot = yp[m:] + yf[m * m:].reshape(m, m) @ c
        max_udot = max(max_udot, float(np.linalg.norm(udot)))

    bound = 3.0 * b_max * tau
    return OdeBoundReport(tau, a_max, b_max, max_udot, bound,
                          max_udot <= bound * (1.0 + 1e-9))
