"""Surfaces of revolution ``g = A(u2)^2 du1^2 + du2^2``.

Along a projected solution with charge ``C`` the quantities

    C2   = A Q1 - C A'
    C3^2 = Q1^2 + Q2^2 + C^2 K^2

are conserved (on the lifted system ``C1 = Q3 / K`` as well, with ``C K``
replaced by ``Q3``). ``C3`` bounds the curvature the curve can reach:
``|K| <= C3 / |C|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.optimize import brentq

from .errors import ChartMismatch, NonTransversal, TurningPoint
from .expr import compile_expr, eval_jet3, parse
from .geomcore import RevolutionChart
from .ode import ProjectedState, Trajectory

__all__ = [
    "RevolutionProfile",
    "FirstIntegrals",
    "ForbiddenRegion",
    "GraphQuadrature",
    "LagrangianCheck",
    "first_integrals",
    "relative_drift",
    "forbidden_region",
    "radicand",
    "first_turning_point",
    "graph_quadrature",
    "lagrangian",
    "lagrangian_action",
]


class RevolutionProfile:
    """Profile ``A(v)`` given as an expression in ``v``.

    ``jet3`` may be overridden by a closed form (the catalog does this for
    speed); the expression remains the source of truth for ``jet``.
    """

    def __init__(self, A: str, u2_domain, u1_period: float | None = 2 * math.pi,
                 u2_period: float | None = None, jet3: Callable | None = None, name: str | None = None):
        self.source = A
        self.node = parse(A, {"v"})
        self._fn = compile_expr(self.node)
        self.u2_domain = (float(u2_domain[0]), float(u2_domain[1]))
        self.u1_period = u1_period
        self.u2_period = u2_period
        if jet3 is not None:
            self.jet3 = jet3  # instance attribute shadows the generic method
        self.name = name

    def __repr__(self) -> str:
        return f"RevolutionProfile({self.source!r}, u2_domain={self.u2_domain})"

    def A(self, v: float) -> float:
        return float(self._fn({"v": float(v)}))

    def jet(self, x):
        return self._fn({"v": x})

    def jet3(self, v: float) -> tuple[float, float, float, float]:
        return eval_jet3(self.node, v).as_tuple()

    def K(self, v: float) -> float:
        A, _, A2, _ = self.jet3(v)
        return -A2 / A

    def dK(self, v: float) -> float:
        A, A1, A2, A3 = self.jet3(v)
        return (A2 * A1 - A3 * A) / (A * A)

    def chart(self, name: str | None = None) -> RevolutionChart:
        return RevolutionChart(self, self.u2_domain, u1_period=self.u1_period, u2_period=self.u2_period,
                               name=name or self.name)


def _profile_of(traj_or_chart, profile=None) -> RevolutionProfile:
    if profile is not None:
        return profile
    chart = traj_or_chart.chart if isinstance(traj_or_chart, Trajectory) else traj_or_chart
    if not isinstance(chart, RevolutionChart):
        raise ChartMismatch(f"{chart!r} is not a surface of revolution")
    return chart.profile


# -- first integrals --------------------------------------------------------------


@dataclass(frozen=True)
class FirstIntegrals:
    C1: np.ndarray | None
    C2: np.ndarray
    C3sq: np.ndarray
    drift: dict

    def initial(self) -> dict:
        out = {"C2": float(self.C2[0]), "C3sq": float(self.C3sq[0])}
        if self.C1 is not None:
            out["C1"] = float(self.C1[0])
        return out


def relative_drift(x: np.ndarray) -> float:
    """``max |x - x0| / max(|x0|, 1)`` over the finite samples."""
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) == 0:
        return float("nan")
    return float(np.max(np.abs(x - x[0])) / max(abs(x[0]), 1.0))


def first_integrals(traj: Trajectory, profile: RevolutionProfile | None = None, C: float | None = None) -> FirstIntegrals:
    if not isinstance(traj.chart, RevolutionChart):
        raise ChartMismatch("first integrals need a surface of revolution")
    prof = _profile_of(traj, profile)
    C = traj.C if C is None else C
    y = traj.y
    n = len(y)
    A = np.empty(n)
    A1 = np.empty(n)
    K = np.empty(n)
    for i in range(n):
        a, a1, a2, _ = prof.jet3(y[i, 1])
        A[i], A1[i], K[i] = a, a1, -a2 / a
    if traj.kind == "lifted":
        Q1, Q2, Q3 = y[:, 3], y[:, 4], y[:, 5]
        regular = np.abs(K) >= traj.chart.singular_tol
        with np.errstate(divide="ignore", invalid="ignore"):
            C1 = np.where(regular, Q3 / K, np.nan)
            C2 = np.where(regular, A * Q1 - A1 / K * Q3, np.nan)
        C3sq = Q1**2 + Q2**2 + Q3**2
    else:
        if C is None:
            raise ValueError("charge C is required for a projected trajectory")
        Q1, Q2 = y[:, 2], y[:, 3]
        C1 = None
        C2 = A * Q1 - C * A1
        C3sq = Q1**2 + Q2**2 + (C * K) ** 2
    drift = {"C2": relative_drift(C2), "C3sq": relative_drift(C3sq)}
    if C1 is not None:
        drift["C1"] = relative_drift(C1)
    return FirstIntegrals(C1, C2, C3sq, drift)


# -- forbidden region ------------------------------------------------------------------


@dataclass(frozen=True)
class ForbiddenRegion:
    K_max: float
    C3sq: float
    bands: tuple[tuple[float, float], ...]
    period: float | None = None

    def contains(self, u2: float, tol: float = 1e-9) -> bool:
        """Whether the parallel ``u2`` lies in one of the bands."""
        for a, b in self.bands:
            x = u2
            if self.period is not None:
                x = a + (u2 - a) % self.period
            if a - tol <= x <= b + tol:
                return True
            if self.period is not None and x - self.period >= a - tol:
                return True
        return False


def _bands(f, lo: float, hi: float, periodic: bool, n: int) -> list[tuple[float, float]]:
    """Sub-intervals of ``[lo, hi]`` where ``f <= 0``, endpoints refined by brentq."""
    xs = np.linspace(lo, hi, n + 1)
    fs = np.array([f(x) for x in xs])
    bands = []
    start = lo if fs[0] <= 0 else None
    for i in range(n):
        a, b = xs[i], xs[i + 1]
        if fs[i] <= 0 < fs[i + 1]:
            r = brentq(f, a, b, xtol=1e-13) if fs[i] < 0 else a
            bands.append((start, r))
            start = None
        elif fs[i] > 0 >= fs[i + 1]:
            start = brentq(f, a, b, xtol=1e-13) if fs[i + 1] < 0 else b
    if start is not None:
        bands.append((start, hi))
    bands = [(float(a), float(b)) for a, b in bands]
    if periodic and len(bands) > 1 and bands[0][0] == lo and bands[-1][1] == hi:
        # join the band that wraps around the seam
        first = bands.pop(0)
        last = bands.pop()
        bands.append((last[0], first[1] + (hi - lo)))
    return bands


def forbidden_region(profile: RevolutionProfile, init: ProjectedState, C: float, n: int = 4000) -> ForbiddenRegion:
    """Bound ``K_max = sqrt(|v0|^2 + C^2 K0^2) / |C|`` and the parallels where ``|K| <= K_max``."""
    if C == 0:
        raise ValueError("the curvature bound needs C != 0")
    K0 = profile.K(init.u2)
    C3sq = init.Q1**2 + init.Q2**2 + (C * K0) ** 2
    K_max = math.sqrt(C3sq) / abs(C)
    lo, hi = profile.u2_domain
    periodic = profile.u2_period is not None
    if periodic:
        hi = lo + profile.u2_period
    else:
        eps = 1e-9 * (hi - lo)
        lo, hi = lo + eps, hi - eps
    bands = _bands(lambda v: abs(profile.K(v)) - K_max, lo, hi, periodic, n)
    return ForbiddenRegion(K_max, C3sq, tuple(bands), profile.u2_period)


# -- graph quadrature ---------------------------------------------------------------


@dataclass(frozen=True)
class GraphQuadrature:
    u2: np.ndarray
    u1: np.ndarray
    direction: int


def radicand(profile: RevolutionProfile, C: float, C2: float, C3sq: float, v: float) -> float:
    """``A^2 (C3^2 - C^2 K^2) - (C2 + C A')^2``; equals ``(A Q2)^2`` on the curve."""
    A, A1, A2, _ = profile.jet3(v)
    K = -A2 / A
    return A * A * (C3sq - C * C * K * K) - (C2 + C * A1) ** 2


def first_turning_point(profile, C, C2, C3sq, u2_init, direction: int, limit: float, n: int = 2000):
    """First ``u2`` between ``u2_init`` and ``limit`` where the radicand vanishes, or ``None``."""
    xs = np.linspace(u2_init, limit, n + 1)
    prev = radicand(profile, C, C2, C3sq, xs[0])
    for a, b in zip(xs[:-1], xs[1:]):
        cur = radicand(profile, C, C2, C3sq, b)
        if cur <= 0:
            if prev <= 0:
                return float(a)
            return float(brentq(lambda v: radicand(profile, C, C2, C3sq, v), a, b, xtol=1e-14))
        prev = cur
    return None


def graph_quadrature(profile: RevolutionProfile, C: float, C2: float, C3sq: float,
                     u2_span: tuple[float, float], u2_init: float, u1_init: float,
                     direction: int = 1, samples: int = 201) -> GraphQuadrature:
    """``u1`` as a function of ``u2`` along the branch with ``sign(Q2) = direction``.

    ``u2_span`` is an interval containing ``u2_init``; the graph is evaluated on
    ``samples`` points across it. Raises :class:`TurningPoint` if the curve
    becomes tangent to a parallel inside the span.
    """
    sigma = 1 if direction >= 0 else -1
    lo, hi = sorted(map(float, u2_span))
    if not lo <= u2_init <= hi:
        raise ValueError("u2_init must lie inside u2_span")
    if radicand(profile, C, C2, C3sq, u2_init) <= 0:
        raise NonTransversal(f"trajectory is tangent to the parallel u2={u2_init} at the start")
    for end in (lo, hi):
        if end != u2_init:
            tp = first_turning_point(profile, C, C2, C3sq, u2_init, sigma, end)
            if tp is not None:
                raise TurningPoint(f"turning point at u2={tp:.12g} inside the span", tp)

    def slope(v):
        A, A1, _, _ = profile.jet3(v)
        return (C2 + C * A1) / (A * sigma * math.sqrt(radicand(profile, C, C2, C3sq, v)))

    grid = np.linspace(lo, hi, samples)
    grid = np.unique(np.append(grid, u2_init))
    k0 = int(np.searchsorted(grid, u2_init))
    u1 = np.empty_like(grid)
    u1[k0] = u1_init
    for k in range(k0 + 1, len(grid)):
        u1[k] = u1[k - 1] + quad(slope, grid[k - 1], grid[k], epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    for k in range(k0 - 1, -1, -1):
        u1[k] = u1[k + 1] - quad(slope, grid[k], grid[k + 1], epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return GraphQuadrature(grid, u1, sigma)


# -- Lagrangian ---------------------------------------------------------------------


def lagrangian(profile: RevolutionProfile, C: float, u2: float, du1: float, du2: float) -> float:
    """``L = |x'|^2 / 2 - C theta(x') - C^2 K^2 / 2`` with ``theta = A' du1``."""
    A, A1, A2, _ = profile.jet3(u2)
    K = -A2 / A
    return 0.5 * (A * A * du1 * du1 + du2 * du2) - C * A1 * du1 - 0.5 * C * C * K * K


@dataclass(frozen=True)
class LagrangianCheck:
    action: float
    residual: np.ndarray
    max_residual: float
    spacing: float


def lagrangian_action(curve, C: float, t_span: tuple[float, float] | None = None,
                      spacing: float | None = None, profile: RevolutionProfile | None = None) -> LagrangianCheck:
    """Action of ``curve`` and its discrete Euler-Lagrange residual.

    ``curve`` is a :class:`Trajectory` on a revolution chart or a callable
    ``t -> (u1, u2)`` (then ``profile`` and ``t_span`` are required). Velocities
    and ``d/dt dL/dx'`` are central differences on a uniform grid of the given
    spacing, so the residual of a true solution is ``O(spacing^2)``.
    """
    if isinstance(curve, Trajectory):
        prof = _profile_of(curve, profile)
        t0, t1 = (float(curve.t[0]), float(curve.t[-1])) if t_span is None else t_span

        def pos(s):
            y = curve.sample(s)
            return y[0], y[1]
    else:
        if profile is None or t_span is None:
            raise ChartMismatch("a bare curve needs a revolution profile and a time span")
        prof = profile
        t0, t1 = t_span
        pos = curve
    if spacing is None:
        spacing = (t1 - t0) / 1000
    n = int(round((t1 - t0) / spacing))
    h = (t1 - t0) / n
    ts = t0 + h * np.arange(n + 1)
    X = np.array([pos(s) for s in ts], dtype=float)
    V = (X[2:] - X[:-2]) / (2 * h)  # at samples 1..n-1
    Xi = X[1:-1]
    m = len(Xi)
    P = np.empty((m, 2))
    dLdx = np.empty(m)
    Lval = np.empty(m)
    for k in range(m):
        A, A1, A2, A3 = prof.jet3(Xi[k, 1])
        K = -A2 / A
        dK = (A2 * A1 - A3 * A) / (A * A)
        v1, v2 = V[k]
        P[k] = (A * A * v1 - C * A1, v2)
        dLdx[k] = A * A1 * v1 * v1 - C * A2 * v1 - C * C * K * dK
        Lval[k] = 0.5 * (A * A * v1 * v1 + v2 * v2) - C * A1 * v1 - 0.5 * C * C * K * K
    dP = (P[2:] - P[:-2]) / (2 * h)
    res = np.column_stack([dP[:, 0], dP[:, 1] - dLdx[1:-1]])
    res_norm = np.hypot(res[:, 0], res[:, 1])
    action = float(trapezoid(Lval, ts[1:-1]))
    return LagrangianCheck(action, res_norm, float(np.max(res_norm)), h)
