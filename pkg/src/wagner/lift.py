"""Lifted frame on the orthonormal frame bundle and its closed-form tables.

Coordinates on the bundle are ``(u1, u2, phi)``. With ``c1 = c^1_12``,
``c2 = c^2_12`` and ``a_i = e_i K / K`` the lifted frame is::

    E1 = e1 + c1 d_phi,   E2 = e2 + c2 d_phi,   E3 = K d_phi

and it is orthonormal for the lifted metric wherever ``K != 0``. Index
convention for every table: ``c_hat[k, i, j]`` is the ``E_k`` component of
``[E_i, E_j]``, ``gamma_hat[k, i, j]`` the ``E_k`` component of
``nabla_{E_i} E_j`` and ``R[l, i, j, k]`` the ``E_l`` component of
``R(E_i, E_j) E_k``; the four-index tensor is ``R_ijkl = R[l, i, j, k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ChartMismatch, SingularPoint
from .geomcore import FramePointData, RevolutionChart, SurfaceChart, orthonormal_frame

__all__ = [
    "LiftPointData",
    "SingularSetInfo",
    "lift_frame",
    "nonholonomity",
    "lift_structure_functions",
    "lift_connection",
    "lift_curvature",
    "curvature_tensor",
    "lifted_metric",
    "lifted_metric_dual",
    "lifted_metric_coords",
    "lifted_metric_dual_coords",
    "frame_matrix",
    "lie_derivative_residual",
    "singular_set",
    "R_HAT_KEYS",
]

R_HAT_KEYS = ("1212", "1213", "1223", "1313", "1323", "2323")


@dataclass(frozen=True)
class LiftPointData:
    base: FramePointData
    phi: float
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray
    singular: bool
    c_hat: np.ndarray | None
    gamma_hat: np.ndarray | None
    r_hat: dict | None


@dataclass(frozen=True)
class SingularSetInfo:
    roots: tuple[float, ...]
    kinds: tuple[str, ...]  # "crossing" or "touching" per root
    tol: float
    identically_zero: bool = False


def _terms(chart: SurfaceChart, p):
    return chart.frame_terms(float(p[0]), float(p[1]))


def _require_regular(chart: SurfaceChart, K: float) -> None:
    if abs(K) < chart.singular_tol:
        raise SingularPoint(f"K = {K:.3e} is within the singular guard {chart.singular_tol:.1e}")


def frame_matrix(chart: SurfaceChart, p) -> np.ndarray:
    """Columns are ``E1, E2, E3`` in the coordinate frame ``(d1, d2, d_phi)``."""
    e1x, e1y, e2x, e2y, c1, c2, K, _, _ = _terms(chart, p)
    return np.array([[e1x, e2x, 0.0], [e1y, e2y, 0.0], [c1, c2, K]])


def _c_hat_from(c1, c2, a1, a2) -> np.ndarray:
    c = np.zeros((3, 3, 3))
    for k, i, j, val in ((0, 0, 1, c1), (1, 0, 1, c2), (2, 0, 1, 1.0), (2, 0, 2, a1), (2, 1, 2, a2)):
        c[k, i, j] = val
        c[k, j, i] = -val
    return c


def _gamma_hat_from(c1, c2, a1, a2) -> np.ndarray:
    g = np.zeros((3, 3, 3))
    listed = (
        ((1, 1, 2), c1),
        ((1, 2, 2), c2),
        ((1, 3, 2), 0.5),
        ((1, 2, 3), 0.5),
        ((2, 1, 3), -0.5),
        ((1, 1, 3), 0.0),
        ((2, 2, 3), 0.0),
        ((1, 3, 3), a1),
        ((2, 3, 3), a2),
    )
    for (k, i, j), val in listed:
        g[k - 1, i - 1, j - 1] = val
        g[j - 1, i - 1, k - 1] = -val
    return g


def _r_hat_from(K, c1, c2, a1, a2, e1a1, e1a2, e2a2) -> dict:
    return {
        "1212": 0.75 - K,
        "1213": a1,
        "1223": a2,
        "1313": -0.25 - e1a1 - c1 * a2 + a1 * a1,
        "1323": -e1a2 + c1 * a1 + a1 * a2,
        "2323": -0.25 - e2a2 + c2 * a1 + a2 * a2,
    }


def lift_frame(chart: SurfaceChart, p, phi: float) -> LiftPointData:
    """Lifted frame at ``(p, phi)``; tables are ``None`` on the singular set."""
    base = orthonormal_frame(chart, p)
    K = base.K
    c1, c2 = base.c112, base.c212
    E1 = np.array([base.e1[0], base.e1[1], c1])
    E2 = np.array([base.e2[0], base.e2[1], c2])
    E3 = np.array([0.0, 0.0, K])
    singular = abs(K) < chart.singular_tol
    c_hat = gamma_hat = r_hat = None
    if not singular:
        c_hat = lift_structure_functions(chart, p)
        gamma_hat = lift_connection(chart, p)
        r_hat = lift_curvature(chart, p)
    return LiftPointData(base, float(phi), E1, E2, E3, singular, c_hat, gamma_hat, r_hat)


def nonholonomity(chart: SurfaceChart, p) -> float:
    """Vertical part of ``[E1^h, E2^h]`` as a multiple of ``d_phi``: the curvature."""
    return _terms(chart, p)[6]


def lift_structure_functions(chart: SurfaceChart, p) -> np.ndarray:
    _, _, _, _, c1, c2, K, e1K, e2K = _terms(chart, p)
    _require_regular(chart, K)
    return _c_hat_from(c1, c2, e1K / K, e2K / K)


def lift_connection(chart: SurfaceChart, p) -> np.ndarray:
    _, _, _, _, c1, c2, K, e1K, e2K = _terms(chart, p)
    _require_regular(chart, K)
    return _gamma_hat_from(c1, c2, e1K / K, e2K / K)


def lift_curvature(chart: SurfaceChart, p) -> dict:
    """The six independent components ``R_ijkl`` keyed ``"1212"`` ... ``"2323"``."""
    _, _, _, _, c1, c2, K, e1K, e2K = _terms(chart, p)
    _require_regular(chart, K)
    e1a1, e1a2, _, e2a2 = chart.second_terms(float(p[0]), float(p[1]))
    return _r_hat_from(K, c1, c2, e1K / K, e2K / K, e1a1, e1a2, e2a2)


def curvature_tensor(r_hat: dict) -> np.ndarray:
    """Assemble ``R_ijkl`` (0-based) from the six components using its symmetries."""
    R = np.zeros((3, 3, 3, 3))
    pairs = {(0, 1): 0, (0, 2): 1, (1, 2): 2}
    comp = np.zeros((3, 3))
    for key, val in r_hat.items():
        i, j, k, l = (int(ch) - 1 for ch in key)
        a, b = pairs[(i, j)], pairs[(k, l)]
        comp[a, b] = comp[b, a] = val
    for (i, j), a in pairs.items():
        for (k, l), b in pairs.items():
            v = comp[a, b]
            R[i, j, k, l] = v
            R[j, i, k, l] = -v
            R[i, j, l, k] = -v
            R[j, i, l, k] = v
    return R


# -- metric matrices ------------------------------------------------------------


def lifted_metric(chart: SurfaceChart, p) -> np.ndarray:
    """Matrix of the lifted metric in the frame ``(E1^h, E2^h, d_phi)``."""
    K = _terms(chart, p)[6]
    _require_regular(chart, K)
    return np.diag([1.0, 1.0, 1.0 / (K * K)])


def lifted_metric_dual(chart: SurfaceChart, p) -> np.ndarray:
    """Dual matrix in the same frame; stays finite and drops rank on the singular set."""
    K = _terms(chart, p)[6]
    return np.diag([1.0, 1.0, K * K])


def lifted_metric_coords(chart: SurfaceChart, p) -> np.ndarray:
    """Lifted metric in ``(d1, d2, d_phi)``: ``M^-T M^-1`` with ``M`` the frame matrix."""
    M = frame_matrix(chart, p)
    _require_regular(chart, M[2, 2])
    Minv = np.linalg.inv(M)
    return Minv.T @ Minv


def lifted_metric_dual_coords(chart: SurfaceChart, p) -> np.ndarray:
    M = frame_matrix(chart, p)
    return M @ M.T


# -- Killing residual -----------------------------------------------------------


_FIELDS = {
    "V1": lambda q: np.array([0.0, 0.0, 1.0]),
    "vertical": lambda q: np.array([0.0, 0.0, 1.0]),
    "V2": lambda q: np.array([1.0, 0.0, 0.0]),
    "rotational": lambda q: np.array([1.0, 0.0, 0.0]),
}


def _jacobian(field, q: np.ndarray, h: float) -> np.ndarray:
    J = np.empty((3, 3))
    for m in range(3):
        dq = np.zeros(3)
        dq[m] = h
        J[:, m] = (np.asarray(field(q + dq)) - np.asarray(field(q - dq))) / (2 * h)
    return J


def bracket_fd(X, Y, q, h: float = 1e-5) -> np.ndarray:
    """Coordinate Lie bracket ``[X, Y] = DY X - DX Y`` by central differences."""
    q = np.asarray(q, dtype=float)
    return _jacobian(Y, q, h) @ np.asarray(X(q)) - _jacobian(X, q, h) @ np.asarray(Y(q))


def lie_derivative_residual(chart: SurfaceChart, field, p, phi: float, h: float | None = None) -> float:
    """Largest entry of ``(L_X g_hat)(E_i, E_j)`` by finite differences.

    ``field`` is ``"V1"``/``"vertical"`` (``d_phi``), ``"V2"``/``"rotational"``
    (``d1``), or a callable ``q -> (X1, X2, X_phi)`` on bundle coordinates.
    """
    if isinstance(field, str):
        if field not in _FIELDS:
            raise ValueError(f"unknown field {field!r}")
        if not isinstance(chart, RevolutionChart):
            raise ChartMismatch("named Killing fields are defined on revolution charts")
        X = _FIELDS[field]
    else:
        X = field
    q0 = np.array([float(p[0]), float(p[1]), float(phi)])
    _require_regular(chart, _terms(chart, p)[6])
    if h is None:
        h = 1e-4 * (1.0 + float(np.max(np.abs(q0[:2]))))

    def frame(i):
        return lambda q: frame_matrix(chart, (q[0], q[1]))[:, i]

    def gval(q, A, B):
        return float(A @ lifted_metric_coords(chart, (q[0], q[1])) @ B)

    G = lifted_metric_coords(chart, p)
    Xq = np.asarray(X(q0), dtype=float)
    fields = [frame(i) for i in range(3)]
    brackets = [bracket_fd(X, Y, q0, h) for Y in fields]
    res = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            Yi, Yj = fields[i], fields[j]
            fp = gval(q0 + h * Xq, Yi(q0 + h * Xq), Yj(q0 + h * Xq))
            fm = gval(q0 - h * Xq, Yi(q0 - h * Xq), Yj(q0 - h * Xq))
            deriv = (fp - fm) / (2 * h)
            res[i, j] = deriv - brackets[i] @ G @ Yj(q0) - Yi(q0) @ G @ brackets[j]
    return float(np.max(np.abs(res)))


# -- singular set ---------------------------------------------------------------


def singular_set(chart: SurfaceChart, n: int = 4000, tol: float = 1e-12) -> SingularSetInfo:
    """Parallels ``u2 = const`` where ``K`` vanishes, for revolution charts."""
    if not isinstance(chart, RevolutionChart):
        raise ChartMismatch("singular_set is implemented for revolution charts")
    lo, hi = chart._sample_bounds(2)
    if chart.u2_period is None:
        span = hi - lo
        lo, hi = lo + 1e-9 * span, hi - 1e-9 * span
    xs = np.linspace(lo, hi, n + 1)
    if chart.u2_period is not None:
        xs = xs[:-1]

    def K(v):
        return chart.frame_terms(0.0, float(v))[6]

    ks = np.array([K(x) for x in xs])
    scale = chart.k_scale
    guard = chart.singular_tol
    if np.all(np.abs(ks) < guard):
        return SingularSetInfo((), (), tol, identically_zero=True)
    roots, kinds = [], []
    m = len(xs)
    last = m if chart.u2_period is not None else m - 1
    for i in range(last):
        j = (i + 1) % m
        a, b = xs[i], xs[j] if j else xs[0] + chart.u2_period
        ka, kb = ks[i], ks[j]
        if ka == 0.0:
            if ks[i - 1] * kb < 0 or i == 0:
                roots.append(float(a))
                kinds.append("crossing")
            continue
        if ka * kb < 0:
            r = brentq(K, a, b, xtol=tol, rtol=4 * np.finfo(float).eps)
            roots.append(float(r))
            kinds.append("crossing")
    # even-order zeros: local minima of |K| that dip to (numerically) zero
    for i in range(1, m - 1):
        if ks[i - 1] * ks[i + 1] > 0 and abs(ks[i]) <= abs(ks[i - 1]) and abs(ks[i]) <= abs(ks[i + 1]):
            res = minimize_scalar(lambda v: abs(K(v)), bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if abs(res.fun) < 1e-9 * scale and not any(abs(res.x - r) < 1e-6 for r in roots):
                roots.append(float(res.x))
                kinds.append("touching")
    order = np.argsort(roots)
    return SingularSetInfo(tuple(roots[k] for k in order), tuple(kinds[k] for k in order), tol)
