"""Independent numerical routes to the closed-form tables.

These deliberately avoid the closed forms they check:

* structure functions from finite-difference Lie brackets of the lifted
  frame fields in bundle coordinates;
* the connection from the Koszul-type formula applied to those brackets;
* the curvature from the general frame identity, differentiating the Koszul
  connection by central differences;
* geodesics on a surface of revolution in coordinate (non-frame) form,
  integrated with scipy's DOP853.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .geomcore import SurfaceChart, christoffel_from_structure, riemann_from_connection
from .lift import R_HAT_KEYS, bracket_fd, frame_matrix, lift_structure_functions

__all__ = [
    "fd_lift_structure",
    "koszul_connection",
    "fd_lift_connection",
    "fd_lift_curvature",
    "fd_nonholonomity",
    "coordinate_geodesic",
    "table_deltas",
]


def _fields(chart: SurfaceChart):
    return [lambda q, i=i: frame_matrix(chart, (q[0], q[1]))[:, i] for i in range(3)]


def fd_lift_structure(chart: SurfaceChart, p, phi: float = 0.0, h: float = 1e-5) -> np.ndarray:
    """``c[k, i, j]`` from coordinate brackets of ``E_i, E_j`` re-expressed in the frame."""
    q = np.array([p[0], p[1], phi], dtype=float)
    E = _fields(chart)
    M = frame_matrix(chart, p)
    c = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(i + 1, 3):
            coeff = np.linalg.solve(M, bracket_fd(E[i], E[j], q, h))
            c[:, i, j] = coeff
            c[:, j, i] = -coeff
    return c


def koszul_connection(c: np.ndarray) -> np.ndarray:
    return christoffel_from_structure(c)


def fd_lift_connection(chart: SurfaceChart, p, phi: float = 0.0, h: float = 1e-5) -> np.ndarray:
    return koszul_connection(fd_lift_structure(chart, p, phi, h))


def fd_lift_curvature(chart: SurfaceChart, p, h: float = 1e-3) -> dict:
    """Six curvature components via differences of the Koszul connection.

    Central differences with one Richardson step; ``h`` is relative to the
    local length ``min(|K| / |grad K|, 1 / |c|)`` so points close to the singular set keep
    their accuracy.
    """

    def gamma(u1, u2):
        return koszul_connection(lift_structure_functions(chart, (u1, u2)))

    terms = chart.frame_terms(*p)
    c1, c2, K, e1K, e2K = terms[4:9]
    grad = abs(e1K) + abs(e2K)
    length = min(1.0, abs(K) / grad if grad > 0 else 1.0, 1.0 / (abs(c1) + abs(c2) + 1e-300))
    step = h * length
    M = frame_matrix(chart, p)

    def central(d, s):
        return (gamma(p[0] + s * d[0], p[1] + s * d[1]) - gamma(p[0] - s * d[0], p[1] - s * d[1])) / (2 * s)

    dgamma = np.zeros((3, 3, 3, 3))
    for i in range(2):  # E3 is vertical and the tables do not depend on phi
        d = M[:2, i]
        coarse, fine = central(d, step), central(d, step / 2)
        dgamma[i] = fine + (fine - coarse) / 3.0
    c = lift_structure_functions(chart, p)
    R = riemann_from_connection(gamma(*p), c, dgamma)
    out = {}
    for key in R_HAT_KEYS:
        i, j, k, l = (int(ch) - 1 for ch in key)
        out[key] = float(R[l, i, j, k])
    return out


def fd_nonholonomity(chart: SurfaceChart, p, phi: float = 0.0, h: float = 1e-5) -> float:
    """``d_phi`` part of ``[E1, E2]`` after removing the lift of the base bracket."""
    q = np.array([p[0], p[1], phi], dtype=float)
    E = _fields(chart)
    br = bracket_fd(E[0], E[1], q, h)
    M = frame_matrix(chart, p)
    base = np.linalg.solve(M[:2, :2], br[:2])
    return float(br[2] - base[0] * M[2, 0] - base[1] * M[2, 1])


def coordinate_geodesic(profile, u1: float, u2: float, du1: float, du2: float, t_eval,
                        rtol: float = 1e-12, atol: float = 1e-13) -> np.ndarray:
    """Geodesic of ``A^2 du1^2 + du2^2`` using coordinate Christoffel symbols.

    Returns rows ``(u1, u2, du1/dt, du2/dt)`` at ``t_eval``.
    """

    def rhs(t, y):
        x1, x2, v1, v2 = y
        A, A1, _, _ = profile.jet3(x2)
        return [v1, v2, -2.0 * A1 / A * v1 * v2, A * A1 * v1 * v1]

    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (t_eval[0], t_eval[-1]), [u1, u2, du1, du2], method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y.T


def table_deltas(chart: SurfaceChart, p, phi: float = 0.0) -> dict:
    """Max absolute differences between closed-form tables and their oracles."""
    from .lift import lift_connection, lift_curvature

    c = lift_structure_functions(chart, p)
    c_fd = fd_lift_structure(chart, p, phi)
    g = lift_connection(chart, p)
    g_k = koszul_connection(c_fd)
    r = lift_curvature(chart, p)
    r_fd = fd_lift_curvature(chart, p)
    return {
        "c_hat": float(np.max(np.abs(c - c_fd))),
        "gamma_hat": float(np.max(np.abs(g - g_k))),
        "r_hat": max(abs(r[k] - r_fd[k]) for k in R_HAT_KEYS),
    }
