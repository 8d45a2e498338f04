"""Explicit Runge-Kutta integrators.

``rk4``   classical fixed-step scheme, kept for convergence-order checks.
``rkf45`` Runge-Kutta-Fehlberg 4(5) with PI step-size control; the fifth
          order solution is propagated (local extrapolation).

Every accepted step stores the state and its derivative, which gives a cubic
Hermite dense output. :meth:`Solution.sample` instead re-takes a single
embedded RK step from the preceding sample, which is as accurate as the
integration itself and is what event localisation uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InterpolationError, MaxStepsExceeded, StepUnderflow

__all__ = ["IntegratorConfig", "Solution", "solve", "adaptive_simpson"]

# Fehlberg tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_FAC_MIN, _FAC_MAX = 0.2, 5.0


@dataclass
class IntegratorConfig:
    method: str = "rkf45"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    h_init: float = 1e-2
    h_min: float = 1e-12
    h_max: float = 0.5
    t_span: tuple[float, float] = (0.0, 10.0)
    max_steps: int = 2_000_000
    events: bool = True

    def __post_init__(self):
        self.method = self.method.lower()
        if self.method not in ("rkf45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        t0, t1 = self.t_span
        self.t_span = (float(t0), float(t1))
        if not t1 > t0:
            raise ValueError("t_span must be increasing")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    rhs: object = field(repr=False, default=None)
    status: str = "complete"
    message: str = ""
    stats: dict = field(default_factory=dict)

    def _locate(self, t: float) -> int:
        if t < self.t[0] - 1e-14 or t > self.t[-1] + 1e-14:
            raise InterpolationError(f"t = {t} outside [{self.t[0]}, {self.t[-1]}]")
        i = int(np.searchsorted(self.t, t, side="right")) - 1
        return min(max(i, 0), len(self.t) - 2)

    def hermite(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolant built from samples and their derivatives."""
        if len(self.t) == 1:
            return self.y[0].copy()
        i = self._locate(t)
        t0, t1 = self.t[i], self.t[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return h00 * self.y[i] + h10 * h * self.f[i] + h01 * self.y[i + 1] + h11 * h * self.f[i + 1]

    def sample(self, t: float) -> np.ndarray:
        """State at ``t`` via one fifth-order step from the previous sample."""
        if self.rhs is None:
            return self.hermite(t)
        if len(self.t) == 1:
            return self.y[0].copy()
        i = self._locate(t)
        dt = t - self.t[i]
        if dt == 0.0:
            return self.y[i].copy()
        y_new, _ = _rkf45_step(self.rhs, self.t[i], self.y[i], self.f[i], dt)
        return y_new


def _error_norm(err, y, y_new, atol, rtol):
    """RMS of ``err`` scaled by ``atol + rtol * max(|y|, |y_new|)``."""
    total = 0.0
    for e, a, b in zip(err.tolist(), y.tolist(), y_new.tolist()):
        total += (e / (atol + rtol * max(abs(a), abs(b)))) ** 2
    return math.sqrt(total / len(err))


def _rkf45_step(rhs, t, y, f0, h):
    # plain float arithmetic: numpy call overhead dominates for short state vectors
    a1, a2, a3, a4, a5 = (tuple(h * x for x in row) for row in _A[1:])
    Y, k1 = y.tolist(), f0.tolist()
    k2 = rhs(t + _C[1] * h, np.array([v + a1[0] * p for v, p in zip(Y, k1)])).tolist()
    k3 = rhs(t + _C[2] * h, np.array([v + a2[0] * p + a2[1] * q for v, p, q in zip(Y, k1, k2)])).tolist()
    k4 = rhs(t + _C[3] * h, np.array([v + a3[0] * p + a3[1] * q + a3[2] * r
                                      for v, p, q, r in zip(Y, k1, k2, k3)])).tolist()
    k5 = rhs(t + _C[4] * h, np.array([v + a4[0] * p + a4[1] * q + a4[2] * r + a4[3] * w
                                      for v, p, q, r, w in zip(Y, k1, k2, k3, k4)])).tolist()
    k6 = rhs(t + _C[5] * h, np.array([v + a5[0] * p + a5[1] * q + a5[2] * r + a5[3] * w + a5[4] * z
                                      for v, p, q, r, w, z in zip(Y, k1, k2, k3, k4, k5)])).tolist()
    b0, _, b2, b3, b4, b5 = (h * x for x in _B5)
    e0, _, e2, e3, e4, e5 = (h * x for x in _E)
    ks = tuple(zip(Y, k1, k3, k4, k5, k6))
    y_new = np.array([v + b0 * p + b2 * r + b3 * w + b4 * z + b5 * g for v, p, r, w, z, g in ks])
    err = np.array([e0 * p + e2 * r + e3 * w + e4 * z + e5 * g for _, p, r, w, z, g in ks])
    return y_new, err


def _rk4_step(rhs, t, y, f0, h):
    k1 = f0
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def solve(rhs, y0, cfg: IntegratorConfig, *, check=None, stop=None, halt_on=()) -> Solution:
    """Integrate ``dy/dt = rhs(t, y)`` over ``cfg.t_span``.

    ``check(t, y)`` may raise to abort on an accepted state. ``stop(y_prev, y)``
    returning true discards the step and ends the run with status
    ``"stopped"``; exceptions listed in ``halt_on`` raised by ``rhs`` end the
    run the same way instead of propagating.
    """
    t0, t1 = cfg.t_span
    y = np.asarray(y0, dtype=float).copy()
    nfev = 0

    def f(t, yy):
        nonlocal nfev
        nfev += 1
        return np.asarray(rhs(t, yy), dtype=float)

    ts, ys, fs = [t0], [y.copy()], []
    status, message = "complete", ""
    try:
        fy = f(t0, y)
    except halt_on as exc:
        raise type(exc)(f"initial state rejected: {exc}") from exc
    fs.append(fy)
    t = t0
    steps = rejected = 0
    h_small = math.inf
    h_large = 0.0

    if cfg.method == "rk4":
        n = max(1, int(round((t1 - t0) / cfg.h_init)))
        h = (t1 - t0) / n
        for i in range(n):
            try:
                y_new = _rk4_step(f, t, y, fy, h)
                t_new = t0 + (i + 1) * h
                fy_new = f(t_new, y_new)
            except halt_on as exc:
                status, message = "stopped", str(exc)
                break
            if stop is not None and stop(y, y_new):
                status, message = "stopped", "stop condition"
                break
            if check is not None:
                check(t_new, y_new)
            t, y, fy = t_new, y_new, fy_new
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy)
        steps = len(ts) - 1
        h_small = h_large = h
    else:
        h = min(cfg.h_init, t1 - t0)
        err_prev = 1.0
        while t < t1:
            if steps >= cfg.max_steps:
                raise MaxStepsExceeded(f"max_steps={cfg.max_steps} reached at t={t}")
            last = t + h >= t1
            if last:
                h = t1 - t
            try:
                y_new, err = _rkf45_step(f, t, y, fy, h)
                en = _error_norm(err, y, y_new, cfg.abs_tol, cfg.rel_tol)
            except halt_on as exc:
                status, message = "stopped", str(exc)
                break
            if not math.isfinite(en):
                en = 1e10
            if en <= 1.0:
                t_new = t1 if last else t + h
                try:
                    fy_new = f(t_new, y_new)
                except halt_on as exc:
                    status, message = "stopped", str(exc)
                    break
                if stop is not None and stop(y, y_new):
                    status, message = "stopped", "stop condition"
                    break
                if check is not None:
                    check(t_new, y_new)
                # the span-clipped final step says nothing about stiffness
                if not last or steps == 0:
                    h_small = min(h_small, h)
                h_large = max(h_large, h)
                t, y, fy = t_new, y_new, fy_new
                ts.append(t)
                ys.append(y.copy())
                fs.append(fy)
                steps += 1
                if en == 0.0:
                    fac = _FAC_MAX
                else:
                    fac = _SAFETY * en ** (-_ALPHA) * err_prev**_BETA
                    fac = min(_FAC_MAX, max(_FAC_MIN, fac))
                err_prev = max(en, 1e-4)
                h = min(cfg.h_max, h * fac)
            else:
                rejected += 1
                fac = max(_FAC_MIN, _SAFETY * en ** (-_ALPHA))
                h = h * min(1.0, fac)
                if h < cfg.h_min:
                    raise StepUnderflow(f"step {h:.3e} below h_min={cfg.h_min:.1e} at t={t}")

    return Solution(
        t=np.array(ts),
        y=np.array(ys),
        f=np.array(fs),
        rhs=f,
        status=status,
        message=message,
        stats={
            "steps": steps,
            "rejected": rejected,
            "nfev": nfev,
            "h_min_accepted": h_small if steps else float("nan"),
            "h_max_accepted": h_large if steps else float("nan"),
        },
    )


def adaptive_simpson(fn, a: float, b: float, tol: float = 1e-12, max_depth: int = 40):
    """Adaptive Simpson quadrature; ``fn`` may return floats or numpy arrays.

    Raises :class:`InterpolationError` when the recursion depth is exhausted
    before the error estimate meets ``tol``.
    """
    if a == b:
        return 0.0 * np.asarray(fn(a))
    fa, fm, fb = np.asarray(fn(a)), np.asarray(fn(0.5 * (a + b))), np.asarray(fn(b))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = np.asarray(fn(lm)), np.asarray(fn(rm))
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if np.max(np.abs(delta)) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth <= 0:
            raise InterpolationError(f"quadrature did not converge on [{a}, {b}]")
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    return rec(a, b, fa, fm, fb, whole, tol, max_depth)
