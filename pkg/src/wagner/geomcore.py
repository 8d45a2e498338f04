"""Riemannian surfaces on a single coordinate chart.

A chart exposes, at any point ``(u1, u2)``, the positively oriented
orthonormal frame ``e1, e2`` (coordinate components), the structure functions
``c^1_12, c^2_12`` of that frame, the Gaussian curvature ``K`` and its frame
derivatives ``e1 K, e2 K``.

Three chart kinds are supported:

* :class:`RevolutionChart`  ``g = A(u2)^2 du1^2 + du2^2``; closed forms in
  the profile and its derivatives, frame ``e1 = (1/A) d1, e2 = d2``.
* :class:`MetricChart`      ``g11, g12, g22`` given as expressions.
* :class:`EmbeddingChart`   a map ``(u, v) -> R^3`` with the induced metric.

General charts push bivariate Taylor jets through Gram-Schmidt, the Lie
bracket and the curvature identity, so every derivative is exact up to
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateMetric, SingularPoint
from .expr import compile_expr, parse
from .jets import TaylorJet

__all__ = [
    "SurfaceChart",
    "RevolutionChart",
    "MetricChart",
    "EmbeddingChart",
    "FramePointData",
    "orthonormal_frame",
    "structure_functions",
    "structure_tensor",
    "christoffel_from_structure",
    "riemann_from_connection",
    "curvature",
    "grad_curvature",
    "complex_structure",
    "frame_jets",
]

# order of metric jets needed for K and grad K, and for second frame derivatives of K
FRAME_ORDER = 3
SECOND_ORDER = 4
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class FramePointData:
    point: tuple[float, float]
    e1: np.ndarray
    e2: np.ndarray
    c112: float
    c212: float
    K: float
    gradK: tuple[float, float]
    christoffel: np.ndarray  # christoffel[k, i, j] = Gamma^k_ij, nabla_{e_i} e_j = Gamma^k_ij e_k

    @property
    def structure(self) -> np.ndarray:
        return structure_tensor(self.c112, self.c212)


# -- index gymnastics shared by the base and the lifted frame ----------------


def structure_tensor(c112, c212) -> np.ndarray:
    """Full ``c[k, i, j]`` with ``[e_i, e_j] = c^k_ij e_k`` for a 2-frame."""
    c = np.zeros((2, 2, 2), dtype=object if not _is_float(c112) else float)
    c[0, 0, 1], c[1, 0, 1] = c112, c212
    c[0, 1, 0], c[1, 1, 0] = -c112, -c212
    return c


def _is_float(x) -> bool:
    return isinstance(x, (float, int, np.floating))


def christoffel_from_structure(c) -> np.ndarray:
    """Connection coefficients of an orthonormal frame from its structure functions.

    ``Gamma^k_ij = (c^k_ij + c^j_ki + c^i_kj) / 2``; works in any dimension and
    for object arrays of jets.
    """
    c = np.asarray(c)
    n = c.shape[0]
    if c.dtype == object:
        g = np.empty((n, n, n), dtype=object)
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    g[k, i, j] = 0.5 * (c[k, i, j] + c[j, k, i] + c[i, k, j])
        return g
    return 0.5 * (c + np.einsum("jki->kij", c) + np.einsum("ikj->kij", c))


def riemann_from_connection(gamma, c, dgamma) -> np.ndarray:
    """Curvature components ``R[l, i, j, k] = R^l_ijk`` of a frame.

    ``dgamma[i, l, j, k]`` is the derivative of ``Gamma^l_jk`` along ``e_i``.
    ``R^l_ijk = e_i G^l_jk - e_j G^l_ik + G^l_is G^s_jk - G^l_js G^s_ik - c^s_ij G^l_sk``.
    """
    gamma = np.asarray(gamma)
    c = np.asarray(c)
    dgamma = np.asarray(dgamma)
    n = gamma.shape[0]
    if gamma.dtype != object and c.dtype != object and dgamma.dtype != object:
        return (
            np.einsum("iljk->lijk", dgamma)
            - np.einsum("jlik->lijk", dgamma)
            + np.einsum("lis,sjk->lijk", gamma, gamma)
            - np.einsum("ljs,sik->lijk", gamma, gamma)
            - np.einsum("sij,lsk->lijk", c, gamma)
        )
    r = np.empty((n, n, n, n), dtype=object)
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = dgamma[i, l, j, k] - dgamma[j, l, i, k]
                    for s in range(n):
                        acc = acc + gamma[l, i, s] * gamma[s, j, k] - gamma[l, j, s] * gamma[s, i, k]
                        acc = acc - c[s, i, j] * gamma[l, s, k]
                    r[l, i, j, k] = acc
    return r


# -- jet pipeline for general charts ----------------------------------------


def _d(field, f):
    """Directional derivative of jet ``f`` along ``field`` (pair of jets/floats)."""
    out = 0.0
    for idx, comp in enumerate(field):
        if _is_float(comp) and comp == 0.0:
            continue
        out = out + comp * f.deriv(idx)
    return out


def frame_jets(g11, g12, g22, second: bool = False) -> dict:
    """Push metric jets through the orthonormal-frame construction.

    Gram-Schmidt with ``e1 ~ d1``; bracket ``[e1, e2]`` resolved in the frame;
    ``K`` from the curvature identity applied to the frame connection.
    Returns jets (and floats) keyed by name; with ``second=True`` also the
    frame derivatives of ``e_a K / K``.
    """
    det = g11 * g22 - g12 * g12
    if g11.value <= 0.0 or det.value <= 0.0:
        raise DegenerateMetric(f"metric not positive definite (g11={g11.value}, det={det.value})")
    s = g11.sqrt()
    rd = det.sqrt()
    e1 = (1.0 / s, 0.0)
    e2 = (-g12 / (s * rd), s / rd)
    # [e1, e2]^m = e1(e2^m) - e2(e1^m)
    bx = _d(e1, e2[0]) - _d(e2, e1[0])
    by = _d(e1, e2[1])
    c212 = by / e2[1]
    c112 = (bx - e2[0] * c212) / e1[0]
    # R^1_122 of the curvature identity collapses, in two dimensions, to
    # K = e1(c^2_12) - e2(c^1_12) - (c^1_12)^2 - (c^2_12)^2
    K = _d(e1, c212) - _d(e2, c112) - c112 * c112 - c212 * c212
    e1K = _d(e1, K)
    e2K = _d(e2, K)
    out = {"e1": e1, "e2": e2, "c112": c112, "c212": c212, "K": K, "e1K": e1K, "e2K": e2K}
    if second:
        if abs(K.value) == 0.0:
            raise SingularPoint("K = 0")
        a1 = e1K / K
        a2 = e2K / K
        out["second"] = (_d(e1, a1), _d(e1, a2), _d(e2, a1), _d(e2, a2))
    return out


def _val(x) -> float:
    return x.value if isinstance(x, TaylorJet) else float(x)


# -- charts -------------------------------------------------------------------


class SurfaceChart:
    """A single chart ``(u1, u2)`` with optional periodic coordinates.

    Non-periodic coordinates live in the open interval of their domain;
    periodic ones are wrapped into ``[lo, lo + period)`` for display only.
    """

    kind = "abstract"

    def __init__(self, u1_domain=(-math.inf, math.inf), u2_domain=(-math.inf, math.inf),
                 u1_period=None, u2_period=None, name: str | None = None):
        self.u1_domain = (float(u1_domain[0]), float(u1_domain[1]))
        self.u2_domain = (float(u2_domain[0]), float(u2_domain[1]))
        self.u1_period = None if u1_period is None else float(u1_period)
        self.u2_period = None if u2_period is None else float(u2_period)
        for dom, per in ((self.u1_domain, self.u1_period), (self.u2_domain, self.u2_period)):
            if not dom[0] < dom[1]:
                raise ValueError(f"empty domain {dom}")
            if per is not None and per <= 0:
                raise ValueError("period must be positive")
        self.name = name or self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"

    # domain handling
    def contains(self, u1: float, u2: float) -> bool:
        if self.u1_period is None and not (self.u1_domain[0] < u1 < self.u1_domain[1]):
            return False
        if self.u2_period is None and not (self.u2_domain[0] < u2 < self.u2_domain[1]):
            return False
        return math.isfinite(u1) and math.isfinite(u2)

    def wrap(self, u1: float, u2: float) -> tuple[float, float]:
        if self.u1_period is not None:
            u1 = self.u1_domain[0] + (u1 - self.u1_domain[0]) % self.u1_period
        if self.u2_period is not None:
            u2 = self.u2_domain[0] + (u2 - self.u2_domain[0]) % self.u2_period
        return u1, u2

    def _sample_bounds(self, which: int) -> tuple[float, float]:
        dom = self.u1_domain if which == 1 else self.u2_domain
        per = self.u1_period if which == 1 else self.u2_period
        lo, hi = dom
        if per is not None:
            hi = lo + per if math.isfinite(lo) else per
            lo = lo if math.isfinite(lo) else 0.0
        lo = lo if math.isfinite(lo) else -10.0
        hi = hi if math.isfinite(hi) else 10.0
        return lo, hi

    def sample_grid(self, n1: int = 40, n2: int = 40) -> list[tuple[float, float]]:
        """Interior grid used for scale estimates and property checks."""
        lo1, hi1 = self._sample_bounds(1)
        lo2, hi2 = self._sample_bounds(2)
        a = lo1 + (hi1 - lo1) * (np.arange(n1) + 0.5) / n1
        b = lo2 + (hi2 - lo2) * (np.arange(n2) + 0.5) / n2
        return [(float(x), float(y)) for x in a for y in b]

    @cached_property
    def k_scale(self) -> float:
        """``max(1, sup |K|)`` over a sample grid; scales the singular guard."""
        best = 1.0
        for p in self.sample_grid():
            try:
                best = max(best, abs(self.frame_terms(*p)[6]))
            except (DegenerateMetric, ArithmeticError):
                continue
        return best

    @property
    def singular_tol(self) -> float:
        return SINGULAR_RTOL * self.k_scale

    # geometry
    def metric(self, u1: float, u2: float) -> tuple[float, float, float]:
        g11, g12, g22 = self.metric_jets(u1, u2, 0)
        return g11.value, g12.value, g22.value

    def metric_jets(self, u1: float, u2: float, order: int):
        raise NotImplementedError

    def frame_terms(self, u1: float, u2: float) -> tuple:
        """``(e1x, e1y, e2x, e2y, c112, c212, K, e1K, e2K)`` as floats."""
        fj = frame_jets(*self.metric_jets(u1, u2, FRAME_ORDER))
        e1, e2 = fj["e1"], fj["e2"]
        return (_val(e1[0]), _val(e1[1]), _val(e2[0]), _val(e2[1]), _val(fj["c112"]),
                _val(fj["c212"]), _val(fj["K"]), _val(fj["e1K"]), _val(fj["e2K"]))

    def second_terms(self, u1: float, u2: float) -> tuple[float, float, float, float]:
        """``(e1(a1), e1(a2), e2(a1), e2(a2))`` with ``a_i = e_i K / K``."""
        fj = frame_jets(*self.metric_jets(u1, u2, SECOND_ORDER), second=True)
        self._check_singular(_val(fj["K"]))
        return tuple(_val(x) for x in fj["second"])

    def _check_singular(self, K: float) -> None:
        if abs(K) < self.singular_tol:
            raise SingularPoint(f"|K| = {abs(K):.3e} below singular guard {self.singular_tol:.1e}")


class RevolutionChart(SurfaceChart):
    """``g = A(u2)^2 du1^2 + du2^2`` for a profile ``A``.

    ``profile`` must provide ``jet3(v) -> (A, A', A'', A''')`` and
    ``jet(x)`` evaluating ``A`` on an arbitrary jet.
    """

    kind = "revolution"

    def __init__(self, profile, u2_domain, u1_period=2 * math.pi, u2_period=None,
                 u1_domain=None, name=None):
        if u1_domain is None:
            u1_domain = (0.0, u1_period) if u1_period is not None else (-math.inf, math.inf)
        super().__init__(u1_domain, u2_domain, u1_period, u2_period, name)
        self.profile = profile

    def metric_jets(self, u1, u2, order):
        a = self.profile.jet(TaylorJet.variable(u2, 1, order, 2))
        if not isinstance(a, TaylorJet):
            a = TaylorJet.constant(float(a), order, 2)
        zero = TaylorJet.constant(0.0, order, 2)
        one = TaylorJet.constant(1.0, order, 2)
        return a * a, zero, one

    def frame_terms(self, u1, u2):
        A, A1, A2, A3 = self.profile.jet3(u2)
        if not A > 0.0:
            raise DegenerateMetric(f"profile A({u2}) = {A} is not positive")
        iA = 1.0 / A
        K = -A2 * iA
        return (iA, 0.0, 0.0, 1.0, A1 * iA, 0.0, K, 0.0, (A2 * A1 - A3 * A) * iA * iA)

    def second_terms(self, u1, u2):
        a = self.profile.jet(TaylorJet.variable(u2, 0, SECOND_ORDER, 1))
        if not isinstance(a, TaylorJet) or a.value <= 0.0:
            raise DegenerateMetric(f"profile A({u2}) is not positive")
        k = -(a.deriv(0).deriv(0)) / a.truncate(2)
        K, K1, K2 = k.value, k.partial(1), k.partial(2)
        self._check_singular(K)
        a2 = K1 / K
        return (0.0, 0.0, 0.0, K2 / K - a2 * a2)


class MetricChart(SurfaceChart):
    kind = "metric"

    def __init__(self, g11: str, g12: str, g22: str, u1_domain, u2_domain,
                 u1_period=None, u2_period=None, name=None):
        super().__init__(u1_domain, u2_domain, u1_period, u2_period, name)
        self.sources = (g11, g12, g22)
        self._fns = [compile_expr(parse(s)) for s in self.sources]

    def metric_jets(self, u1, u2, order):
        env = {"u": TaylorJet.variable(u1, 0, order, 2), "v": TaylorJet.variable(u2, 1, order, 2)}
        out = []
        for fn in self._fns:
            val = fn(env)
            out.append(val if isinstance(val, TaylorJet) else TaylorJet.constant(float(val), order, 2))
        return tuple(out)


class EmbeddingChart(SurfaceChart):
    """Induced metric of ``(u, v) -> (x, y, z)``."""

    kind = "embedding"

    def __init__(self, x: str, y: str, z: str, u1_domain, u2_domain,
                 u1_period=None, u2_period=None, name=None):
        super().__init__(u1_domain, u2_domain, u1_period, u2_period, name)
        self.sources = (x, y, z)
        self._fns = [compile_expr(parse(s)) for s in self.sources]

    def embed(self, u1: float, u2: float) -> np.ndarray:
        env = {"u": float(u1), "v": float(u2)}
        return np.array([float(fn(env)) for fn in self._fns])

    def metric_jets(self, u1, u2, order):
        env = {"u": TaylorJet.variable(u1, 0, order + 1, 2),
               "v": TaylorJet.variable(u2, 1, order + 1, 2)}
        xs = []
        for fn in self._fns:
            val = fn(env)
            xs.append(val if isinstance(val, TaylorJet) else TaylorJet.constant(float(val), order + 1, 2))
        d1 = [x.deriv(0) for x in xs]
        d2 = [x.deriv(1) for x in xs]
        g11 = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
        g12 = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
        g22 = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
        return g11, g12, g22


# -- operations ---------------------------------------------------------------


def orthonormal_frame(chart: SurfaceChart, p) -> FramePointData:
    """Positively oriented orthonormal frame and its first-order data at ``p``."""
    u1, u2 = p
    e1x, e1y, e2x, e2y, c1, c2, K, e1K, e2K = chart.frame_terms(u1, u2)
    return FramePointData(
        point=(float(u1), float(u2)),
        e1=np.array([e1x, e1y]),
        e2=np.array([e2x, e2y]),
        c112=c1,
        c212=c2,
        K=K,
        gradK=(e1K, e2K),
        christoffel=christoffel_from_structure(structure_tensor(c1, c2)),
    )


def structure_functions(chart: SurfaceChart, p) -> tuple[float, float]:
    t = chart.frame_terms(*p)
    return t[4], t[5]


def curvature(chart: SurfaceChart, p) -> float:
    return chart.frame_terms(*p)[6]


def grad_curvature(chart: SurfaceChart, p) -> tuple[float, float]:
    t = chart.frame_terms(*p)
    return t[7], t[8]


def complex_structure(X) -> np.ndarray:
    """Rotation by +pi/2 in frame components: ``J e1 = e2``, ``J e2 = -e1``."""
    x1, x2 = X
    return np.array([-x2, x1], dtype=float)
