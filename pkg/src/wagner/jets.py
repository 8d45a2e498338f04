"""Forward-mode automatic differentiation with truncated Taylor jets.

Two representations share one table of elementary-function derivatives:

``Jet3``
    value and first three derivatives in a single variable, stored as plain
    floats. This is the hot-path type used by surface-of-revolution profiles.

``TaylorJet``
    a truncated Taylor polynomial of arbitrary total order in one or two
    variables, backed by a flat numpy coefficient array. Used where mixed
    partials or fourth derivatives are needed (general charts, curvature
    tensors of the lift).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = ["Jet3", "TaylorJet", "taylor_coefficients", "FUNCTIONS"]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs")


def _binom(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (p - i) / (i + 1)
    return out


def _power_coefficients(x0: float, p: float, order: int) -> list[float]:
    is_int = float(p).is_integer()
    if not is_int and x0 < 0.0:
        raise DomainError(f"non-integer power {p} of negative base {x0}")
    if x0 == 0.0:
        if is_int and p >= 0:
            # polynomial: only the x^p term survives
            return [1.0 if k == int(p) else 0.0 for k in range(order + 1)]
        raise DomainError(f"power {p} is not differentiable at 0")
    return [_binom(p, k) * x0 ** (p - k) for k in range(order + 1)]


def taylor_coefficients(name: str, x0: float, order: int, arg: float | None = None) -> list[float]:
    """Return ``f^(k)(x0) / k!`` for ``k = 0..order``.

    ``arg`` is the exponent for ``name == "pow"``.
    """
    fact = [float(math.factorial(k)) for k in range(order + 1)]
    if name == "exp":
        try:
            e = math.exp(x0)
        except OverflowError as exc:
            raise DomainError(f"exp overflow at {x0}") from exc
        return [e / f for f in fact]
    if name == "log":
        if x0 <= 0.0:
            raise DomainError(f"log of non-positive value {x0}")
        out = [math.log(x0)]
        out += [(-1.0) ** (k + 1) / (k * x0**k) for k in range(1, order + 1)]
        return out
    if name in ("sin", "cos"):
        s, c = math.sin(x0), math.cos(x0)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return [cycle[k % 4] / fact[k] for k in range(order + 1)]
    if name in ("sinh", "cosh"):
        try:
            s, c = math.sinh(x0), math.cosh(x0)
        except OverflowError as exc:
            raise DomainError(f"{name} overflow at {x0}") from exc
        cycle = [s, c] if name == "sinh" else [c, s]
        return [cycle[k % 2] / fact[k] for k in range(order + 1)]
    if name == "sqrt":
        if x0 < 0.0:
            raise DomainError(f"sqrt of negative value {x0}")
        return _power_coefficients(x0, 0.5, order)
    if name == "pow":
        return _power_coefficients(x0, float(arg), order)
    if name == "recip":
        if x0 == 0.0:
            raise DomainError("division by zero")
        return [(-1.0) ** k / x0 ** (k + 1) for k in range(order + 1)]
    raise ValueError(f"no Taylor table for {name!r}")


# -- scalar (float) evaluation with the same domain rules -------------------


def float_apply(name: str, x: float) -> float:
    try:
        if name == "log":
            if x <= 0.0:
                raise DomainError(f"log of non-positive value {x}")
            return math.log(x)
        if name == "sqrt":
            if x < 0.0:
                raise DomainError(f"sqrt of negative value {x}")
            return math.sqrt(x)
        if name == "abs":
            return abs(x)
        return getattr(math, name)(x)
    except OverflowError as exc:
        raise DomainError(f"{name} overflow at {x}") from exc


def float_pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise DomainError("division by zero in power")
    if a < 0.0 and not float(b).is_integer():
        raise DomainError(f"non-integer power {b} of negative base {a}")
    try:
        return float(a) ** b
    except OverflowError as exc:
        raise DomainError("power overflow") from exc


def float_div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


# -- Jet3 ---------------------------------------------------------------------


class Jet3:
    """Value plus first three derivatives in one variable."""

    __slots__ = ("value", "d1", "d2", "d3")

    def __init__(self, value: float, d1: float = 0.0, d2: float = 0.0, d3: float = 0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3

    @classmethod
    def variable(cls, x: float) -> Jet3:
        return cls(float(x), 1.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.value, self.d1, self.d2, self.d3)

    def __repr__(self) -> str:
        return f"Jet3({self.value!r}, {self.d1!r}, {self.d2!r}, {self.d3!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, Jet3):
            return self.as_tuple() == other.as_tuple()
        return NotImplemented

    __hash__ = None

    def _compose(self, f0: float, f1: float, f2: float, f3: float) -> Jet3:
        # Faa di Bruno to third order; f_k are plain derivatives of the outer function
        g1, g2, g3 = self.d1, self.d2, self.d3
        return Jet3(
            f0,
            f1 * g1,
            f2 * g1 * g1 + f1 * g2,
            f3 * g1 * g1 * g1 + 3.0 * f2 * g1 * g2 + f1 * g3,
        )

    def _apply_table(self, name: str, arg: float | None = None) -> Jet3:
        t = taylor_coefficients(name, self.value, 3, arg)
        return self._compose(t[0], t[1], 2.0 * t[2], 6.0 * t[3])

    def __add__(self, o):
        if isinstance(o, Jet3):
            return Jet3(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
        return Jet3(self.value + o, self.d1, self.d2, self.d3)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.value, -self.d1, -self.d2, -self.d3)

    def __pos__(self):
        return self

    def __sub__(self, o):
        if isinstance(o, Jet3):
            return Jet3(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
        return Jet3(self.value - o, self.d1, self.d2, self.d3)

    def __rsub__(self, o):
        return Jet3(o - self.value, -self.d1, -self.d2, -self.d3)

    def __mul__(self, o):
        if isinstance(o, Jet3):
            a0, a1, a2, a3 = self.value, self.d1, self.d2, self.d3
            b0, b1, b2, b3 = o.value, o.d1, o.d2, o.d3
            return Jet3(
                a0 * b0,
                a1 * b0 + a0 * b1,
                a2 * b0 + 2.0 * a1 * b1 + a0 * b2,
                a3 * b0 + 3.0 * a2 * b1 + 3.0 * a1 * b2 + a0 * b3,
            )
        return Jet3(self.value * o, self.d1 * o, self.d2 * o, self.d3 * o)

    __rmul__ = __mul__

    def reciprocal(self) -> Jet3:
        return self._apply_table("recip")

    def __truediv__(self, o):
        if isinstance(o, Jet3):
            return self * o.reciprocal()
        if o == 0:
            raise DomainError("division by zero")
        return self * (1.0 / o)

    def __rtruediv__(self, o):
        return self.reciprocal() * o

    def __pow__(self, o):
        if isinstance(o, Jet3):
            return (o * self.log()).exp()
        return self._apply_table("pow", float(o))

    def __rpow__(self, o):
        if o <= 0:
            raise DomainError(f"power of non-positive base {o} with variable exponent")
        return (self * math.log(o)).exp()

    def sin(self):
        return self._apply_table("sin")

    def cos(self):
        return self._apply_table("cos")

    def tan(self):
        if math.cos(self.value) == 0.0:
            raise DomainError("tan pole")
        return self.sin() / self.cos()

    def exp(self):
        return self._apply_table("exp")

    def log(self):
        return self._apply_table("log")

    def sqrt(self):
        return self._apply_table("sqrt")

    def sinh(self):
        return self._apply_table("sinh")

    def cosh(self):
        return self._apply_table("cosh")

    def tanh(self):
        return self.sinh() / self.cosh()

    def abs(self):
        if self.value > 0.0:
            return self
        if self.value < 0.0:
            return -self
        raise DomainError("abs is not differentiable at 0")


# -- multivariate truncated Taylor polynomials --------------------------------


@lru_cache(maxsize=None)
def _monomials(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    # ordered by total degree so that truncation is a prefix slice
    if nvars == 1:
        return tuple((d,) for d in range(order + 1))
    if nvars == 2:
        return tuple((d - j, j) for d in range(order + 1) for j in range(d + 1))
    raise ValueError("TaylorJet supports one or two variables")


@lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(_monomials(nvars, order))}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    mons = _monomials(nvars, order)
    idx = _index(nvars, order)
    left, right, target = [], [], []
    for i, a in enumerate(mons):
        for j, b in enumerate(mons):
            m = tuple(x + y for x, y in zip(a, b))
            if sum(m) <= order:
                left.append(i)
                right.append(j)
                target.append(idx[m])
    return np.array(left), np.array(right), np.array(target), len(mons)


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int):
    mons = _monomials(nvars, order)
    idx_low = _index(nvars, order - 1)
    src, dst, fac = [], [], []
    for i, m in enumerate(mons):
        if m[var] == 0:
            continue
        low = list(m)
        low[var] -= 1
        src.append(i)
        dst.append(idx_low[tuple(low)])
        fac.append(float(m[var]))
    return np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac), len(idx_low)


class TaylorJet:
    """Truncated Taylor polynomial ``sum c_m dx^m`` about a base point.

    Coefficients are Taylor coefficients (partials divided by factorials).
    Arithmetic between jets of different order truncates to the lower one.
    """

    __slots__ = ("c", "order", "nvars")

    def __init__(self, coeffs, order: int, nvars: int):
        self.c = coeffs
        self.order = order
        self.nvars = nvars

    @classmethod
    def constant(cls, value: float, order: int, nvars: int) -> TaylorJet:
        c = np.zeros(len(_monomials(nvars, order)))
        c[0] = value
        return cls(c, order, nvars)

    @classmethod
    def variable(cls, value: float, index: int, order: int, nvars: int) -> TaylorJet:
        jet = cls.constant(value, order, nvars)
        if order >= 1:
            unit = [0] * nvars
            unit[index] = 1
            jet.c[_index(nvars, order)[tuple(unit)]] = 1.0
        return jet

    @property
    def value(self) -> float:
        return float(self.c[0])

    def partial(self, *counts: int) -> float:
        """Mixed partial derivative, e.g. ``partial(1, 2)`` is d^3/dx dy^2."""
        if len(counts) != self.nvars:
            raise ValueError("one derivative count per variable")
        if sum(counts) > self.order:
            raise ValueError("derivative order exceeds jet order")
        scale = 1.0
        for k in counts:
            scale *= math.factorial(k)
        return float(self.c[_index(self.nvars, self.order)[tuple(counts)]]) * scale

    def truncate(self, order: int) -> TaylorJet:
        if order >= self.order:
            return self
        n = len(_monomials(self.nvars, order))
        return TaylorJet(self.c[:n], order, self.nvars)

    def deriv(self, var: int) -> TaylorJet:
        """Partial derivative as a jet one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, dst, fac, n = _deriv_table(self.nvars, self.order, var)
        out = np.zeros(n)
        out[dst] = self.c[src] * fac
        return TaylorJet(out, self.order - 1, self.nvars)

    def __repr__(self) -> str:
        return f"TaylorJet(order={self.order}, nvars={self.nvars}, c={self.c.tolist()})"

    def _coerce(self, o):
        if isinstance(o, TaylorJet):
            if o.nvars != self.nvars:
                raise ValueError("mixing jets with different variable counts")
            order = min(self.order, o.order)
            return self.truncate(order), o.truncate(order)
        return None

    def __add__(self, o):
        pair = self._coerce(o)
        if pair:
            a, b = pair
            return TaylorJet(a.c + b.c, a.order, a.nvars)
        c = self.c.copy()
        c[0] += o
        return TaylorJet(c, self.order, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(-self.c, self.order, self.nvars)

    def __pos__(self):
        return self

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        pair = self._coerce(o)
        if pair:
            a, b = pair
            left, right, target, n = _mul_table(a.nvars, a.order)
            out = np.bincount(target, weights=a.c[left] * b.c[right], minlength=n)
            return TaylorJet(out, a.order, a.nvars)
        return TaylorJet(self.c * o, self.order, self.nvars)

    __rmul__ = __mul__

    def _compose(self, coeffs: list[float]) -> TaylorJet:
        # f(x0 + d) = sum t_k d^k with d the nilpotent part, by Horner
        d = TaylorJet(self.c.copy(), self.order, self.nvars)
        d.c[0] = 0.0
        out = TaylorJet.constant(coeffs[self.order], self.order, self.nvars)
        for k in range(self.order - 1, -1, -1):
            out = out * d
            out.c[0] += coeffs[k]
        return out

    def _apply_table(self, name: str, arg: float | None = None) -> TaylorJet:
        return self._compose(taylor_coefficients(name, self.value, self.order, arg))

    def reciprocal(self) -> TaylorJet:
        return self._apply_table("recip")

    def __truediv__(self, o):
        if isinstance(o, TaylorJet):
            return self * o.reciprocal()
        if o == 0:
            raise DomainError("division by zero")
        return self * (1.0 / o)

    def __rtruediv__(self, o):
        return self.reciprocal() * o

    def __pow__(self, o):
        if isinstance(o, TaylorJet):
            return (o * self.log()).exp()
        return self._apply_table("pow", float(o))

    def __rpow__(self, o):
        if o <= 0:
            raise DomainError(f"power of non-positive base {o} with variable exponent")
        return (self * math.log(o)).exp()

    def sin(self):
        return self._apply_table("sin")

    def cos(self):
        return self._apply_table("cos")

    def tan(self):
        if math.cos(self.value) == 0.0:
            raise DomainError("tan pole")
        return self.sin() / self.cos()

    def exp(self):
        return self._apply_table("exp")

    def log(self):
        return self._apply_table("log")

    def sqrt(self):
        return self._apply_table("sqrt")

    def sinh(self):
        return self._apply_table("sinh")

    def cosh(self):
        return self._apply_table("cosh")

    def tanh(self):
        return self.sinh() / self.cosh()

    def abs(self):
        if self.value > 0.0:
            return self
        if self.value < 0.0:
            return -self
        raise DomainError("abs is not differentiable at 0")
