"""Built-in surfaces with their known analytic facts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidParams, UnknownSurface
from .geomcore import EmbeddingChart, SurfaceChart
from .revolution import RevolutionProfile

__all__ = ["CatalogEntry", "builtin", "entry", "NAMES", "ELLIPSOID_EPS"]

ELLIPSOID_EPS = 1e-3

_DEFAULTS = {
    "sphere": {"K0": 1.0},
    "flat": {},
    "torus": {"R": 2.0, "r": 1.0},
    "ellipsoid": {"a": 1.0, "b": 1.5, "c": 2.0},
    "custom-profile": {"A": None, "u2_lo": None, "u2_hi": None, "u1_period": 2 * math.pi, "u2_period": None},
}
NAMES = tuple(_DEFAULTS)


@dataclass
class CatalogEntry:
    name: str
    params: dict
    chart: SurfaceChart
    K_exact: Callable[[float, float], float] | None = None
    sigma: tuple[float, ...] | None = None
    embed: Callable[[float, float], np.ndarray] | None = None
    profile: RevolutionProfile | None = None
    extra: dict = field(default_factory=dict)

    @cached_property
    def min_curvature_point(self) -> tuple[float, float]:
        """Point of least ``K``: grid search on the analytic ``K``, refined on the chart's."""
        if self.K_exact is None:
            raise InvalidParams(f"{self.name} has no analytic curvature")
        pts = self.chart.sample_grid(60, 60)
        best = min(pts, key=lambda p: self.K_exact(*p))
        lo, hi = self.chart.u2_domain

        def f(x):
            if not lo < x[1] < hi:
                return math.inf
            return self.chart.frame_terms(x[0], x[1])[6]

        res = minimize(f, np.array(best), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
        u1, u2 = self.chart.wrap(float(res.x[0]), float(res.x[1]))
        return u1, u2


def _params(name: str, given: dict | None) -> dict:
    if name not in _DEFAULTS:
        raise UnknownSurface(f"unknown surface {name!r}; choose from {', '.join(NAMES)}")
    out = dict(_DEFAULTS[name])
    for k, v in (given or {}).items():
        if k not in out:
            raise InvalidParams(f"{name} has no parameter {k!r}")
        out[k] = v
    for k, v in out.items():
        if k in ("A",):
            continue
        if v is not None:
            try:
                out[k] = float(v)
            except (TypeError, ValueError) as exc:
                raise InvalidParams(f"{name}: parameter {k} must be a number") from exc
    return out


def _positive(name: str, params: dict, *keys: str) -> None:
    for k in keys:
        if not params[k] > 0 or not math.isfinite(params[k]):
            raise InvalidParams(f"{name}: {k} must be positive, got {params[k]}")


def entry(name: str, params: dict | None = None) -> CatalogEntry:
    p = _params(name, params)
    if name == "sphere":
        _positive(name, p, "K0")
        K0 = p["K0"]
        s = math.sqrt(K0)

        def jet3(v, s=s):
            sn, cs = math.sin(s * v), math.cos(s * v)
            return sn / s, cs, -s * sn, -s * s * cs

        prof = RevolutionProfile(f"sin({s!r}*v)/{s!r}", (0.0, math.pi / s), jet3=jet3, name=f"sphere(K0={K0:g})")
        return CatalogEntry(
            name, p, prof.chart(), K_exact=lambda u1, u2: K0, sigma=(),
            embed=lambda u1, u2: np.array([math.sin(s * u2) * math.cos(u1), math.sin(s * u2) * math.sin(u1),
                                           -math.cos(s * u2)]) / s,
            profile=prof,
        )
    if name == "flat":
        prof = RevolutionProfile("1", (-math.inf, math.inf), u1_period=None,
                                 jet3=lambda v: (1.0, 0.0, 0.0, 0.0), name="flat")
        return CatalogEntry(name, p, prof.chart(), K_exact=lambda u1, u2: 0.0, sigma=None,
                            embed=lambda u1, u2: np.array([u1, u2, 0.0]), profile=prof)
    if name == "torus":
        _positive(name, p, "R", "r")
        R, r = p["R"], p["r"]
        if not R > r:
            raise InvalidParams(f"torus needs R > r, got R={R}, r={r}")

        def jet3(v, R=R, r=r):
            cs, sn = math.cos(v / r), math.sin(v / r)
            return R + r * cs, -sn, -cs / r, sn / (r * r)

        prof = RevolutionProfile(f"{R!r} + {r!r}*cos(v/{r!r})", (0.0, 2 * math.pi * r),
                                 u2_period=2 * math.pi * r, jet3=jet3, name=f"torus(R={R:g},r={r:g})")
        return CatalogEntry(
            name, p, prof.chart(),
            K_exact=lambda u1, u2: math.cos(u2 / r) / (r * (R + r * math.cos(u2 / r))),
            sigma=(math.pi * r / 2, 3 * math.pi * r / 2),
            embed=lambda u1, u2: np.array([(R + r * math.cos(u2 / r)) * math.cos(u1),
                                           (R + r * math.cos(u2 / r)) * math.sin(u1), r * math.sin(u2 / r)]),
            profile=prof,
        )
    if name == "ellipsoid":
        _positive(name, p, "a", "b", "c")
        a, b, c = p["a"], p["b"], p["c"]
        chart = EmbeddingChart(
            f"{a!r}*cos(u)*cos(v)", f"{b!r}*sin(u)*cos(v)", f"{c!r}*sin(v)",
            u1_domain=(0.0, 2 * math.pi),
            u2_domain=(-math.pi / 2 + ELLIPSOID_EPS, math.pi / 2 - ELLIPSOID_EPS),
            u1_period=2 * math.pi,
            name=f"ellipsoid(a={a:g},b={b:g},c={c:g})",
        )

        def xyz(u1, u2):
            return np.array([a * math.cos(u1) * math.cos(u2), b * math.sin(u1) * math.cos(u2), c * math.sin(u2)])

        def K_exact(u1, u2):
            x, y, z = xyz(u1, u2)
            s = x * x / a**4 + y * y / b**4 + z * z / c**4
            return 1.0 / (a * a * b * b * c * c * s * s)

        return CatalogEntry(name, p, chart, K_exact=K_exact, sigma=(), embed=xyz)
    # custom profile
    if not p["A"]:
        raise InvalidParams("custom-profile needs an expression A")
    if p["u2_lo"] is None or p["u2_hi"] is None:
        raise InvalidParams("custom-profile needs u2_lo and u2_hi")
    prof = RevolutionProfile(str(p["A"]), (p["u2_lo"], p["u2_hi"]), u1_period=p["u1_period"],
                             u2_period=p["u2_period"], name="custom-profile")
    return CatalogEntry(name, p, prof.chart(), K_exact=None, sigma=None, profile=prof)


def builtin(name: str, params: dict | None = None) -> SurfaceChart:
    """Chart of a built-in surface: ``sphere``, ``flat``, ``torus``, ``ellipsoid`` or ``custom-profile``."""
    return entry(name, params).chart
