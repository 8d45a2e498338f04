"""Geodesics of the lifted metric and their projections.

State vectors use velocity components in the orthonormal frame:

* projected ``y = (u1, u2, Q1, Q2)`` with charge ``C``;
* lifted    ``y = (u1, u2, phi, Q1, Q2, Q3)`` in the frame ``E1, E2, E3``.

The projected system has no ``1/K`` and integrates straight through the
singular set. The lifted one carries ``e_i K / K`` and stops before ``K``
changes sign; use :func:`lift_solution` on a projected run to continue a
generalized geodesic across it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateMetric,
    InterpolationError,
    LeftDomain,
    SingularApproach,
    SingularPoint,
)
from .geomcore import RevolutionChart, SurfaceChart
from .integrators import IntegratorConfig, Solution, adaptive_simpson, solve

__all__ = [
    "ProjectedState",
    "LiftedState",
    "CrossingEvent",
    "Trajectory",
    "IntegratorConfig",
    "integrate_projected",
    "integrate_lifted",
    "lift_solution",
    "detect_sigma_crossings",
    "projected_rhs",
    "lifted_rhs",
]

TWO_PI = 2.0 * math.pi
INTERP_CHECKS = 256
BISECT_DT = 1e-10


@dataclass(frozen=True)
class ProjectedState:
    u1: float
    u2: float
    Q1: float
    Q2: float
    t: float = 0.0

    @classmethod
    def from_angle(cls, u1: float, u2: float, angle: float, speed: float = 1.0, t: float = 0.0):
        """Velocity at ``angle`` from ``e1`` with the given speed."""
        return cls(u1, u2, speed * math.cos(angle), speed * math.sin(angle), t)

    def vector(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.Q1, self.Q2], dtype=float)


@dataclass(frozen=True)
class LiftedState:
    u1: float
    u2: float
    phi: float
    Q1: float
    Q2: float
    Q3: float
    t: float = 0.0

    @property
    def winding(self) -> int:
        return math.floor(self.phi / TWO_PI)

    @property
    def phi_mod(self) -> float:
        return self.phi - TWO_PI * self.winding

    def vector(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.phi, self.Q1, self.Q2, self.Q3], dtype=float)


@dataclass(frozen=True)
class CrossingEvent:
    t: float
    u1: float
    u2: float
    K: float
    vertical_velocity: float
    kind: str  # "transversal" or "grazing"


@dataclass
class Trajectory:
    kind: str  # "projected" or "lifted"
    chart: SurfaceChart
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    C: float | None
    diagnostics: dict = field(default_factory=dict)
    crossings: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    status: str = "complete"
    solution: Solution | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.t)

    def _col(self, projected: int | None, lifted: int) -> np.ndarray:
        if self.kind == "lifted":
            return self.y[:, lifted]
        if projected is None:
            return np.full(len(self.t), np.nan)
        return self.y[:, projected]

    @property
    def u1(self):
        return self.y[:, 0]

    @property
    def u2(self):
        return self.y[:, 1]

    @property
    def phi(self):
        return self._col(None, 2)

    @property
    def Q1(self):
        return self._col(2, 3)

    @property
    def Q2(self):
        return self._col(3, 4)

    @property
    def Q3(self):
        return self._col(None, 5)

    def sample(self, t: float) -> np.ndarray:
        """State vector at ``t``; re-steps the integrator when it is available."""
        if self.solution is not None:
            return self.solution.sample(t)
        return self._hermite().hermite(t)

    def interpolate(self, t: float) -> np.ndarray:
        return self._hermite().hermite(t)

    def _hermite(self) -> Solution:
        return Solution(self.t, self.y, self.dy)

    def state_at(self, t: float):
        y = self.sample(t)
        if self.kind == "lifted":
            return LiftedState(*map(float, y), t=float(t))
        return ProjectedState(*map(float, y), t=float(t))

    def final_state(self):
        return self.state_at(float(self.t[-1]))

    def columns(self) -> dict[str, np.ndarray]:
        """Output columns with periodic coordinates wrapped; ``nan`` marks n/a."""
        u1 = self.u1.copy()
        u2 = self.u2.copy()
        for i in range(len(u1)):
            u1[i], u2[i] = self.chart.wrap(u1[i], u2[i])
        phi = self.phi
        if self.kind == "lifted":
            phi = np.mod(phi, TWO_PI)
        return {
            "t": self.t,
            "u1": u1,
            "u2": u2,
            "phi": phi,
            "Q1": self.Q1,
            "Q2": self.Q2,
            "Q3": self.Q3,
            "K": self.diagnostics["K"],
            "C1": self.diagnostics["C1"],
            "C2": self.diagnostics["C2"],
            "C3sq": self.diagnostics["C3sq"],
        }


# -- right-hand sides -----------------------------------------------------------


def _frame(chart: SurfaceChart, u1: float, u2: float):
    if not chart.contains(u1, u2):
        raise LeftDomain(f"({u1:.6g}, {u2:.6g}) left the chart domain")
    try:
        return chart.frame_terms(u1, u2)
    except DegenerateMetric as exc:
        raise LeftDomain(str(exc)) from exc


def projected_rhs(chart: SurfaceChart, C: float):
    C2 = C * C

    def rhs(t, y):
        u1, u2, Q1, Q2 = y
        e1x, e1y, e2x, e2y, c1, c2, K, e1K, e2K = _frame(chart, u1, u2)
        return np.array([
            Q1 * e1x + Q2 * e2x,
            Q1 * e1y + Q2 * e2y,
            -c1 * Q1 * Q2 - c2 * Q2 * Q2 - C * K * Q2 - C2 * K * e1K,
            c1 * Q1 * Q1 + c2 * Q1 * Q2 + C * K * Q1 - C2 * K * e2K,
        ])

    return rhs


def lifted_rhs(chart: SurfaceChart, guard: float | None = None):
    guard = chart.singular_tol if guard is None else guard

    def rhs(t, y):
        u1, u2, _, Q1, Q2, Q3 = y
        e1x, e1y, e2x, e2y, c1, c2, K, e1K, e2K = _frame(chart, u1, u2)
        if abs(K) < guard:
            raise SingularPoint(f"|K| = {abs(K):.3e} at ({u1:.6g}, {u2:.6g})")
        a1, a2 = e1K / K, e2K / K
        return np.array([
            Q1 * e1x + Q2 * e2x,
            Q1 * e1y + Q2 * e2y,
            Q1 * c1 + Q2 * c2 + Q3 * K,
            -c1 * Q1 * Q2 - c2 * Q2 * Q2 - Q2 * Q3 - a1 * Q3 * Q3,
            c1 * Q1 * Q1 + c2 * Q1 * Q2 + Q1 * Q3 - a2 * Q3 * Q3,
            a1 * Q1 * Q3 + a2 * Q2 * Q3,
        ])

    return rhs


# -- diagnostics ----------------------------------------------------------------


def _diagnostics(chart: SurfaceChart, kind: str, y: np.ndarray, C: float | None) -> dict:
    n = len(y)
    K = np.empty(n)
    C2 = np.full(n, np.nan)
    rev = isinstance(chart, RevolutionChart)
    for i in range(n):
        K[i] = chart.frame_terms(y[i, 0], y[i, 1])[6]
        if rev:
            A, A1, _, _ = chart.profile.jet3(y[i, 1])
            if kind == "lifted":
                Q1, Q3 = y[i, 3], y[i, 5]
                C2[i] = A * Q1 - (A1 / K[i]) * Q3 if abs(K[i]) >= chart.singular_tol else np.nan
            else:
                C2[i] = A * y[i, 2] - C * A1
    if kind == "lifted":
        Q1, Q2, Q3 = y[:, 3], y[:, 4], y[:, 5]
        with np.errstate(divide="ignore", invalid="ignore"):
            C1 = np.where(np.abs(K) >= chart.singular_tol, Q3 / K, np.nan)
        C3sq = Q1 * Q1 + Q2 * Q2 + Q3 * Q3
    else:
        Q1, Q2 = y[:, 2], y[:, 3]
        C1 = np.full(n, np.nan)
        C3sq = Q1 * Q1 + Q2 * Q2 + (C * K) ** 2
    return {"K": K, "C1": C1, "C2": C2, "C3sq": C3sq}


def _trajectory(chart, kind, sol: Solution, C, status="complete") -> Trajectory:
    traj = Trajectory(
        kind=kind,
        chart=chart,
        t=sol.t,
        y=sol.y,
        dy=sol.f,
        C=C,
        stats=dict(sol.stats),
        status=status,
        solution=sol,
    )
    traj.diagnostics = _diagnostics(chart, kind, sol.y, C)
    return traj


# -- integration ------------------------------------------------------------------


def _domain_check(chart):
    def check(t, y):
        if not chart.contains(y[0], y[1]):
            raise LeftDomain(f"left the chart domain at t={t:.6g}")

    return check


def integrate_projected(chart: SurfaceChart, init, C: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the projected equation with charge ``C`` from ``init``."""
    cfg = cfg or IntegratorConfig()
    if isinstance(init, ProjectedState):
        y0 = init.vector()
        t0 = init.t
    else:
        y0 = np.asarray(init, dtype=float)
        t0 = cfg.t_span[0]
    if not chart.contains(y0[0], y0[1]):
        raise LeftDomain(f"initial point ({y0[0]}, {y0[1]}) outside the chart domain")
    if t0 != cfg.t_span[0]:
        cfg = _shift(cfg, t0)
    sol = solve(projected_rhs(chart, float(C)), y0, cfg, check=_domain_check(chart))
    traj = _trajectory(chart, "projected", sol, float(C))
    if cfg.events:
        traj.crossings = detect_sigma_crossings(traj, chart)
    return traj


def _shift(cfg: IntegratorConfig, t0: float) -> IntegratorConfig:
    span = cfg.t_span[1] - cfg.t_span[0]
    return IntegratorConfig(cfg.method, cfg.abs_tol, cfg.rel_tol, cfg.h_init, cfg.h_min, cfg.h_max,
                            (t0, t0 + span), cfg.max_steps, cfg.events)


def integrate_lifted(chart: SurfaceChart, init, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the lifted geodesic system.

    Raises :class:`SingularApproach` if the curve reaches the singular set; the
    exception carries the trajectory up to the last safe sample.
    """
    cfg = cfg or IntegratorConfig()
    if isinstance(init, LiftedState):
        y0 = init.vector()
        t0 = init.t
    else:
        y0 = np.asarray(init, dtype=float)
        t0 = cfg.t_span[0]
    if not chart.contains(y0[0], y0[1]):
        raise LeftDomain(f"initial point ({y0[0]}, {y0[1]}) outside the chart domain")
    guard = chart.singular_tol
    K0 = chart.frame_terms(y0[0], y0[1])[6]
    if abs(K0) < guard:
        raise SingularPoint(f"initial point lies on the singular set (K = {K0:.3e})")
    sign0 = math.copysign(1.0, K0)

    def stop(y_prev, y_new):
        return sign0 * chart.frame_terms(y_new[0], y_new[1])[6] < guard

    if t0 != cfg.t_span[0]:
        cfg = _shift(cfg, t0)
    sol = solve(lifted_rhs(chart, guard), y0, cfg, check=_domain_check(chart), stop=stop,
                halt_on=(SingularPoint,))
    traj = _trajectory(chart, "lifted", sol, None, status="complete" if sol.status == "complete" else "singular")
    if sol.status != "complete":
        t_end = float(sol.t[-1])
        traj.crossings = [_approach_event(traj, t_end)]
        raise SingularApproach(
            f"trajectory reached the singular set after t={t_end:.6g}; truncated at the last safe sample",
            traj,
        )
    return traj


def _approach_event(traj: Trajectory, t: float) -> CrossingEvent:
    y = traj.y[-1]
    K = traj.diagnostics["K"][-1]
    return CrossingEvent(t, float(y[0]), float(y[1]), float(K), abs(float(y[5]) * K), "approach")


# -- lift of a projected solution --------------------------------------------------


def lift_solution(chart: SurfaceChart, gamma: Trajectory, phi0: float = 0.0, C: float | None = None,
                  tol: float = 1e-12, interp_tol: float = 1e-5) -> Trajectory:
    """Lift a projected trajectory to the bundle.

    ``phi = phi0 + int (Q1 c1 + Q2 c2) dt + C int K^2 dt`` with both integrals
    taken by adaptive Simpson over the cubic Hermite dense output; ``Q3 = C K``.
    """
    if gamma.kind != "projected":
        raise ValueError("lift_solution expects a projected trajectory")
    C = gamma.C if C is None else float(C)
    K_samples = gamma.diagnostics["K"]
    if np.mean(np.abs(K_samples) < chart.singular_tol) > 0.5:
        raise SingularPoint("the curve lies in the singular set on most of its samples")
    dense = gamma._hermite()
    if gamma.solution is not None and len(gamma.t) > 1:
        worst = 0.0
        # an evenly spaced subset of intervals is enough to catch sparse output
        for i in np.unique(np.linspace(0, len(gamma.t) - 2, min(INTERP_CHECKS, len(gamma.t) - 1)).astype(int)):
            tm = 0.5 * (gamma.t[i] + gamma.t[i + 1])
            worst = max(worst, float(np.max(np.abs(dense.hermite(tm) - gamma.solution.sample(tm)))))
        if worst > interp_tol:
            raise InterpolationError(f"dense output error {worst:.2e} exceeds {interp_tol:.1e}; samples too sparse")

    def segment(i):
        # cubic Hermite on [t_i, t_i+1] in scalar form, skipping the interval search
        ta, h = float(gamma.t[i]), float(gamma.t[i + 1] - gamma.t[i])
        ya, yb = gamma.y[i].tolist(), gamma.y[i + 1].tolist()
        fa, fb = gamma.dy[i].tolist(), gamma.dy[i + 1].tolist()

        def integrand(t):
            s = (t - ta) / h
            s2 = s * s
            s3 = s2 * s
            w0, w1 = 2 * s3 - 3 * s2 + 1, (s3 - 2 * s2 + s) * h
            w2, w3 = 3 * s2 - 2 * s3, (s3 - s2) * h
            u1, u2, Q1, Q2 = (w0 * ya[j] + w1 * fa[j] + w2 * yb[j] + w3 * fb[j] for j in range(4))
            _, _, _, _, c1, c2, K, _, _ = chart.frame_terms(u1, u2)
            return np.array([Q1 * c1 + Q2 * c2, C * K * K])

        return integrand

    n = len(gamma.t)
    acc = np.zeros((n, 2))
    for i in range(n - 1):
        acc[i + 1] = acc[i] + adaptive_simpson(segment(i), gamma.t[i], gamma.t[i + 1], tol)
    phi = phi0 + acc[:, 0] + acc[:, 1]
    Q3 = C * K_samples
    y = np.column_stack([gamma.y[:, 0], gamma.y[:, 1], phi, gamma.y[:, 2], gamma.y[:, 3], Q3])
    dy = np.empty_like(y)
    for i in range(n):
        u1, u2, Q1, Q2 = gamma.y[i]
        _, _, _, _, c1, c2, K, e1K, e2K = chart.frame_terms(u1, u2)
        dy[i] = [gamma.dy[i, 0], gamma.dy[i, 1], Q1 * c1 + Q2 * c2 + C * K * K,
                 gamma.dy[i, 2], gamma.dy[i, 3], C * (Q1 * e1K + Q2 * e2K)]
    out = Trajectory(kind="lifted", chart=chart, t=gamma.t.copy(), y=y, dy=dy, C=C,
                     stats=dict(gamma.stats), status=gamma.status)
    out.diagnostics = _diagnostics(chart, "lifted", y, C)
    out.crossings = list(gamma.crossings)
    return out


# -- singular-set crossings ------------------------------------------------------------


def _vertical_speed(traj: Trajectory, y: np.ndarray, K: float) -> float:
    if traj.kind == "lifted":
        return abs(float(y[5]) * K)
    return abs((traj.C or 0.0) * K * K)


def detect_sigma_crossings(traj: Trajectory, chart: SurfaceChart | None = None,
                           graze_tol: float | None = None) -> list[CrossingEvent]:
    """Sign changes of ``K`` along the curve, bisected to ``|dt| < 1e-10``.

    Local minima of ``|K|`` that reach ``graze_tol`` without a sign change are
    reported as grazing events.
    """
    chart = chart or traj.chart
    graze_tol = 1e-8 * chart.k_scale if graze_tol is None else graze_tol
    t = traj.t
    K = traj.diagnostics.get("K")
    if K is None:
        K = np.array([chart.frame_terms(y[0], y[1])[6] for y in traj.y])

    def K_at(s):
        y = traj.sample(s)
        return chart.frame_terms(y[0], y[1])[6], y

    events = []
    n = len(t)
    for i in range(n - 1):
        ka, kb = K[i], K[i + 1]
        if ka == 0.0 and i > 0 and K[i - 1] * kb < 0:
            y = traj.y[i]
            events.append(CrossingEvent(float(t[i]), float(y[0]), float(y[1]), 0.0,
                                        _vertical_speed(traj, y, 0.0), "transversal"))
            continue
        if ka * kb < 0:
            a, b = float(t[i]), float(t[i + 1])
            sa = math.copysign(1.0, ka)
            while b - a > BISECT_DT:
                m = 0.5 * (a + b)
                km, _ = K_at(m)
                if km == 0.0:
                    a = b = m
                    break
                if math.copysign(1.0, km) == sa:
                    a = m
                else:
                    b = m
            tc = 0.5 * (a + b)
            kc, y = K_at(tc)
            events.append(CrossingEvent(tc, float(y[0]), float(y[1]), float(kc),
                                        _vertical_speed(traj, y, kc), "transversal"))
    for i in range(1, n - 1):
        if K[i - 1] * K[i] <= 0 or K[i] * K[i + 1] <= 0:
            continue
        if abs(K[i]) <= abs(K[i - 1]) and abs(K[i]) <= abs(K[i + 1]):
            res = minimize_scalar(lambda s: abs(K_at(s)[0]), bounds=(float(t[i - 1]), float(t[i + 1])),
                                  method="bounded", options={"xatol": BISECT_DT})
            if res.fun < graze_tol:
                kc, y = K_at(float(res.x))
                events.append(CrossingEvent(float(res.x), float(y[0]), float(y[1]), float(kc),
                                            _vertical_speed(traj, y, kc), "grazing"))
    events.sort(key=lambda e: e.t)
    return events
