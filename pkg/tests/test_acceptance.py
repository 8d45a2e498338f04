"""Acceptance criteria 1-10.

Each test is named ``test_criterion_NN_*``; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the run.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from exprgen import corpus, fd_derivatives
from wagner.catalog import entry
from wagner.cli import main
from wagner.errors import LeftDomain
from wagner.expr import eval_jet3
from wagner.integrators import IntegratorConfig
from wagner.lift import lift_curvature
from wagner.ode import LiftedState, ProjectedState, integrate_lifted, integrate_projected, lift_solution
from wagner.oracles import coordinate_geodesic, table_deltas
from wagner.revolution import (
    first_integrals,
    first_turning_point,
    forbidden_region,
    graph_quadrature,
    lagrangian_action,
)

from conftest import cfg, random_point

TWO_PI = 2 * math.pi


# -- 1 ---------------------------------------------------------------------------


def test_criterion_01_closed_form_tables():
    rng = np.random.default_rng(101)
    surfaces = [entry("sphere", {"K0": 1.0}), entry("sphere", {"K0": 4.0}), entry("torus", {"R": 2, "r": 1})]
    start = time.perf_counter()
    worst = {"c_hat": 0.0, "gamma_hat": 0.0, "r_hat": 0.0}
    for cat in surfaces:
        chart = cat.chart
        n = 0
        while n < 50:
            p = random_point(rng, chart)
            # keep away from the singular set so the oracle steps stay meaningful
            if abs(chart.frame_terms(*p)[6]) < 0.05:
                continue
            d = table_deltas(chart, p, float(rng.uniform(0, TWO_PI)))
            for k in worst:
                worst[k] = max(worst[k], d[k])
            n += 1
    elapsed = time.perf_counter() - start
    print(f"worst deltas {worst}, {elapsed:.2f} s")
    assert max(worst.values()) < 1e-6
    assert elapsed < 10.0


# -- 2 ---------------------------------------------------------------------------


@pytest.mark.parametrize("K0", [1.0, 4.0, 0.25])
def test_criterion_02_constant_curvature(K0):
    cat = entry("sphere", {"K0": K0})
    rng = np.random.default_rng(2)
    for _ in range(5):
        p = random_point(rng, cat.chart)
        r = lift_curvature(cat.chart, p)
        assert abs(r["1212"] - (0.75 - K0)) < 1e-12


# -- 3 ---------------------------------------------------------------------------

# Torus starts that stay on one side of the singular set for t in [0, 20]:
# (u2 interval, angle half-width) around angle 0, mirrored to (-u2, pi - angle).
_TORUS_STARTS = {0.5: ((-0.4, 0.4), 0.35), 1.0: ((0.3, 1.0), 0.35), 3.0: ((-1.15, -0.9), 0.3)}
_K_MARGIN = 0.02
_POLE_MARGIN = 0.25


def _draw_start(rng, surface, C):
    u1 = float(rng.uniform(0, TWO_PI))
    if surface == "sphere":
        return ProjectedState.from_angle(u1, float(rng.uniform(0.5, math.pi - 0.5)), float(rng.uniform(0, TWO_PI)))
    (lo, hi), da = _TORUS_STARTS[C]
    u2, a = float(rng.uniform(lo, hi)), float(rng.uniform(-da, da))
    if rng.integers(2):
        u2, a = -u2, math.pi - a
    return ProjectedState.from_angle(u1, u2, a)


def _admissible(surface, traj):
    if surface == "sphere":
        # the polar chart degenerates at the poles; stay clear of them
        return traj.u2.min() > _POLE_MARGIN and traj.u2.max() < math.pi - _POLE_MARGIN
    return np.abs(traj.diagnostics["K"]).min() > _K_MARGIN


def _cross_validate(surface, C, rng, n=20):
    cat = entry("sphere", {"K0": 1.0}) if surface == "sphere" else entry("torus", {"R": 2, "r": 1})
    chart = cat.chart
    c = cfg(20.0, events=False)
    worst, accepted, tries = 0.0, 0, 0
    while accepted < n:
        tries += 1
        assert tries < 20 * n, "initial-condition sampler rejects too often"
        init = _draw_start(rng, surface, C)
        try:
            gamma = integrate_projected(chart, init, C, c)
        except LeftDomain:
            continue
        if not _admissible(surface, gamma):
            continue
        phi0 = float(rng.uniform(0, TWO_PI))
        lifted_from_proj = lift_solution(chart, gamma, phi0=phi0)
        K0 = chart.frame_terms(init.u1, init.u2)[6]
        start = LiftedState(init.u1, init.u2, phi0, init.Q1, init.Q2, C * K0)
        direct = integrate_lifted(chart, start, c)
        for i, t in enumerate(gamma.t):
            worst = max(worst, float(np.max(np.abs(direct.sample(t) - lifted_from_proj.y[i]))))
        accepted += 1
    return worst


def test_criterion_03_cross_validation():
    rng = np.random.default_rng(303)
    start = time.perf_counter()
    worst = {}
    for surface in ("sphere", "torus"):
        for C in (0.5, 1.0, 3.0):
            worst[(surface, C)] = _cross_validate(surface, C, rng)
    elapsed = time.perf_counter() - start
    print(f"sup-norm deviations {worst}, {elapsed:.1f} s")
    assert max(worst.values()) < 1e-6
    assert elapsed < 60.0


# -- 4 ---------------------------------------------------------------------------


def test_criterion_04_conservation():
    torus = entry("torus", {"R": 2, "r": 1})
    chart, prof = torus.chart, torus.profile
    c = cfg(100.0, events=False)
    drifts = []
    for C, (u2, a) in [(0.0, (0.7, 0.9)), (1.0, (0.5, 0.3)), (3.0, (math.pi / 2, math.pi / 4)), (0.5, (-2.0, 2.0))]:
        tr = integrate_projected(chart, ProjectedState.from_angle(0.3, u2, a), C, c)
        drifts.append(max(first_integrals(tr).drift.values()))
    # lifted runs that stay in K > 0 over the whole span
    for u2, a, C in [(0.1, 0.2, 0.5), (-0.2, math.pi - 0.1, 0.5)]:
        K0 = chart.frame_terms(0.0, u2)[6]
        tr = integrate_lifted(chart, LiftedState(0.0, u2, 0.0, math.cos(a), math.sin(a), C * K0), c)
        drifts.append(max(first_integrals(tr).drift.values()))
    print(f"relative drifts {drifts}")
    assert max(drifts) < 1e-7

    # C = 0: Clairaut against an independent coordinate-form geodesic
    u1, u2, a = 0.3, 0.7, 0.9
    tr = integrate_projected(chart, ProjectedState.from_angle(u1, u2, a), 0.0, c)
    A0 = prof.A(u2)
    ref = coordinate_geodesic(prof, u1, u2, math.cos(a) / A0, math.sin(a), tr.t)
    A = np.array([prof.A(v) for v in ref[:, 1]])
    clairaut_ref = A * A * ref[:, 2]
    clairaut = first_integrals(tr).C2
    pos = float(np.max(np.abs(ref[:, :2] - tr.y[:, :2])))
    dev = float(np.max(np.abs(clairaut - clairaut_ref)))
    print(f"Clairaut deviation {dev:.2e}, position deviation {pos:.2e}")
    assert dev < 1e-7
    assert pos < 1e-7


# -- 5 ---------------------------------------------------------------------------


def test_criterion_05_horizontal_crossing():
    torus = entry("torus", {"R": 2, "r": 1})
    chart = torus.chart
    rng = np.random.default_rng(505)
    c = cfg(20.0)
    crossed = 0
    worst_v, smallest_h = 0.0, math.inf
    while crossed < 10:
        init = ProjectedState.from_angle(float(rng.uniform(0, TWO_PI)), float(rng.uniform(-math.pi, math.pi)),
                                         float(rng.uniform(0, TWO_PI)))
        tr = integrate_projected(chart, init, 1.0, c)
        events = [e for e in tr.crossings if e.kind == "transversal"]
        if not events:
            continue
        crossed += 1
        worst_v = max(worst_v, max(e.vertical_velocity for e in events))
        smallest_h = min(smallest_h, tr.stats["h_min_accepted"])
    print(f"max vertical velocity {worst_v:.2e}, min accepted step {smallest_h:.2e}")
    assert worst_v < 1e-8
    assert smallest_h > 1e-6


# -- 6 ---------------------------------------------------------------------------


def test_criterion_06_forbidden_region(tmp_path):
    torus = entry("torus", {"R": 2, "r": 1})
    chart = torus.chart
    rng = np.random.default_rng(606)
    c = cfg(20.0, events=False)
    worst_excess = -math.inf
    for k in range(100):
        C = (1.0, 3.0)[k % 2]
        init = ProjectedState.from_angle(float(rng.uniform(0, TWO_PI)), float(rng.uniform(-math.pi, math.pi)),
                                         float(rng.uniform(0, TWO_PI)), speed=float(rng.uniform(0.5, 2.0)))
        K0 = chart.frame_terms(init.u1, init.u2)[6]
        bound = math.sqrt(init.Q1**2 + init.Q2**2 + (C * K0) ** 2) / abs(C)
        tr = integrate_projected(chart, init, C, c)
        worst_excess = max(worst_excess, float(np.max(np.abs(tr.diagnostics["K"]))) - bound)
    print(f"max |K| - bound = {worst_excess:.3e}")
    assert worst_excess <= 1e-7

    # band confinement for C = 3 started on a zero-curvature parallel
    init = ProjectedState.from_angle(0.0, math.pi / 2, math.pi / 4)
    tr = integrate_projected(chart, init, 3.0, cfg(100.0, events=False))
    region = forbidden_region(torus.profile, init, 3.0)
    assert len(region.bands) >= 1
    assert all(region.contains(v) for v in tr.u2)
    assert all(region.contains(s) for s in torus.sigma)
    # a proper band: the inner equator (K = -1) is excluded
    assert not region.contains(math.pi)
    assert not any(region.contains(v) for v in np.linspace(2.2, 4.0, 9))


# -- 7 ---------------------------------------------------------------------------


@pytest.mark.parametrize("C", [0.0, 1.0])
def test_criterion_07_quadrature(C):
    torus = entry("torus", {"R": 2, "r": 1})
    chart, prof = torus.chart, torus.profile
    u1_0, u2_0, a = 0.2, 0.3, 0.6
    init = ProjectedState.from_angle(u1_0, u2_0, a)
    tr = integrate_projected(chart, init, C, cfg(30.0, events=False))
    fi = first_integrals(tr)
    C2, C3sq = fi.initial()["C2"], fi.initial()["C3sq"]
    tp = first_turning_point(prof, C, C2, C3sq, u2_0, 1, u2_0 + 2 * math.pi)
    assert tp is not None
    u2_end = u2_0 + 0.98 * (tp - u2_0)
    quad = graph_quadrature(prof, C, C2, C3sq, (u2_0, u2_end), u2_0, u1_0, direction=1)
    # time at which the trajectory first reaches each u2 sample
    i_end = int(np.argmax(tr.u2 >= u2_end))
    assert i_end > 0
    worst = 0.0
    for v, u1_q in zip(quad.u2[1:], quad.u1[1:]):
        j = int(np.argmax(tr.u2 >= v))
        ts = brentq(lambda s: tr.sample(s)[1] - v, tr.t[j - 1], tr.t[j], xtol=1e-14)
        worst = max(worst, abs(tr.sample(ts)[0] - u1_q))
    print(f"C={C}: max u1 deviation {worst:.2e} up to u2={u2_end:.4f}")
    assert worst < 1e-5


# -- 8 ---------------------------------------------------------------------------


def test_criterion_08_euler_lagrange():
    torus = entry("torus", {"R": 2, "r": 1})
    tr = integrate_projected(torus.chart, ProjectedState.from_angle(0.0, 0.4, 0.8), 1.0, cfg(6.0, 1e-12, events=False))
    spacings = [0.04, 0.02, 0.01, 0.005]
    res = [lagrangian_action(tr, 1.0, spacing=h).max_residual for h in spacings]
    slope = float(np.polyfit(np.log(spacings), np.log(res), 1)[0])
    print(f"residuals {res}, order {slope:.3f}")
    assert abs(slope - 2.0) <= 0.3

    # a parallel off the equator is not a solution
    v0 = 0.8
    ctrl = lagrangian_action(lambda t: (t, v0), 1.0, t_span=(0.0, 6.0), spacing=0.01, profile=torus.profile)
    print(f"negative control residual {ctrl.max_residual:.3e}")
    assert ctrl.max_residual > 1e-2


# -- 9 ---------------------------------------------------------------------------


@pytest.mark.parametrize("number", [1, 2, 3, 4])
def test_criterion_09_figures(number, tmp_path):
    assert main(["figure", str(number), "--outdir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / f"fig{number}.json").read_text())
    assert (tmp_path / f"fig{number}.svg").stat().st_size > 1000
    assert list(tmp_path.glob(f"fig{number}*.csv"))
    print(json.dumps(report["checks"], sort_keys=True))
    assert report["checks"]["passed"] is True


# -- 10 --------------------------------------------------------------------------


def test_criterion_10_rk4_order():
    sphere = entry("sphere", {"K0": 1.0})
    a, T = 0.7, 3.0
    init = ProjectedState.from_angle(0.0, math.pi / 2, a)
    p0 = np.array([1.0, 0.0, 0.0])
    w = np.array([0.0, math.cos(a), math.sin(a)])
    exact = p0 * math.cos(T) + w * math.sin(T)
    hs = [2.0**-k for k in range(4, 10)]
    errs = []
    for h in hs:
        c = IntegratorConfig(method="rk4", h_init=h, t_span=(0.0, T), events=False)
        y = integrate_projected(sphere.chart, init, 0.0, c).y[-1]
        errs.append(float(np.linalg.norm(sphere.embed(y[0], y[1]) - exact)))
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    print(f"RK4 errors {errs}, order {order:.3f}")
    assert abs(order - 4.0) <= 0.2


def test_criterion_10_ad_corpus():
    worst = 0.0
    for text, node, x in corpus(300):
        jet = eval_jet3(node, x)
        fd = fd_derivatives(node, x)
        ad = (jet.d1, jet.d2, jet.d3)
        for d_ad, d_fd in zip(ad, fd):
            worst = max(worst, abs(d_ad - d_fd) / max(1.0, abs(d_fd)))
    print(f"worst AD vs FD deviation {worst:.2e}")
    assert worst < 1e-6
