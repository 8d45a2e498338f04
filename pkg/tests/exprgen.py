"""Random expression corpus in ``v`` for AD checks."""

from __future__ import annotations

import math

import numpy as np

from wagner.errors import DomainError
from wagner.expr import evaluate, parse

_UNARY = ("sin", "cos", "exp", "tanh", "sqrt", "log")
_BINARY = ("+", "-", "*", "/")


def random_expression(rng: np.random.Generator, depth: int = 3) -> str:
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.55:
            return "v"
        return f"{rng.uniform(0.2, 3.0):.3f}"
    r = rng.random()
    if r < 0.35:
        fn = _UNARY[rng.integers(len(_UNARY))]
        inner = random_expression(rng, depth - 1)
        if fn in ("sqrt", "log"):
            inner = f"(1.5 + ({inner})^2)"
        if fn == "exp":
            inner = f"sin({inner})"
        return f"{fn}({inner})"
    if r < 0.45:
        return f"({random_expression(rng, depth - 1)})^{int(rng.integers(2, 4))}"
    op = _BINARY[rng.integers(len(_BINARY))]
    left = random_expression(rng, depth - 1)
    right = random_expression(rng, depth - 1)
    if op == "/":
        right = f"(2 + cos({right}))"
    return f"({left}) {op} ({right})"


def fd_derivatives(node, x: float, h: float | None = None) -> tuple[float, float, float]:
    """First three derivatives by Richardson-extrapolated central differences.

    With ``h=None`` several base steps are tried and, per derivative, the
    estimate that agrees best with its neighbour at half the step wins.
    """

    def f(t):
        return evaluate(node, v=t)

    def stencil(s):
        fp1, fm1 = f(x + s), f(x - s)
        fp2, fm2 = f(x + 2 * s), f(x - 2 * s)
        f0 = f(x)
        d1 = (fp1 - fm1) / (2 * s)
        d2 = (fp1 - 2 * f0 + fm1) / (s * s)
        d3 = (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * s**3)
        return np.array([d1, d2, d3])

    def richardson(s):
        a, b, c = stencil(s), stencil(s / 2), stencil(s / 4)
        # two Richardson levels remove the h^2 and h^4 terms
        ab = (4 * b - a) / 3
        bc = (4 * c - b) / 3
        return (16 * bc - ab) / 15

    if h is not None:
        return tuple(richardson(h))
    steps = [0.08 / 2**k for k in range(6)]
    est = np.array([richardson(s) for s in steps])
    spread = np.abs(np.diff(est, axis=0))
    best = np.argmin(spread, axis=0)
    return tuple(float(est[best[d] + 1, d]) for d in range(3))


def corpus(n: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        text = random_expression(rng, 3)
        node = parse(text)
        x = float(rng.uniform(-1.5, 1.5))
        try:
            val = evaluate(node, v=x)
        except (DomainError, ZeroDivisionError, OverflowError):
            continue
        # large values push the finite-difference oracle into its round-off floor
        if not math.isfinite(val) or abs(val) > 1e3:
            continue
        out.append((text, node, x))
    return out
