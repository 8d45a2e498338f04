from __future__ import annotations

import math

import numpy as np
import pytest

from wagner.catalog import entry
from wagner.errors import ChartMismatch, SingularPoint
from wagner.geomcore import MetricChart
from wagner.lift import (
    R_HAT_KEYS,
    curvature_tensor,
    frame_matrix,
    lie_derivative_residual,
    lift_connection,
    lift_curvature,
    lift_frame,
    lift_structure_functions,
    lifted_metric,
    lifted_metric_coords,
    lifted_metric_dual,
    lifted_metric_dual_coords,
    nonholonomity,
    singular_set,
)
from wagner.oracles import fd_lift_curvature, fd_lift_structure, fd_nonholonomity, koszul_connection
from wagner.revolution import RevolutionProfile

from conftest import random_point

TORUS_Q = (0.4, math.pi / 4)


def _regular_points(rng, chart, n, kmin=0.05):
    out = []
    while len(out) < n:
        p = random_point(rng, chart)
        if abs(chart.frame_terms(*p)[6]) >= kmin:
            out.append(p)
    return out


# -- frame -----------------------------------------------------------------------


def test_flat_lift_frame():
    d = lift_frame(entry("flat").chart, (0.1, 0.2), 0.3)
    assert np.array_equal(d.E1, [1.0, 0.0, 0.0])
    assert np.array_equal(d.E2, [0.0, 1.0, 0.0])
    assert np.array_equal(d.E3, [0.0, 0.0, 0.0])
    assert d.singular and d.c_hat is None and d.r_hat is None


def test_sphere_lift_frame(sphere):
    d = lift_frame(sphere.chart, (0.5, 1.0), 2.0)
    assert d.E3 == pytest.approx([0.0, 0.0, 1.0])
    assert not d.singular
    assert d.E1[2] == pytest.approx(math.cos(1.0) / math.sin(1.0))


def test_torus_lift_frame_on_sigma(torus):
    d = lift_frame(torus.chart, (0.0, math.pi / 2), 0.0)
    assert abs(d.E3[2]) < 1e-15
    assert d.singular
    assert d.gamma_hat is None


def test_nonholonomity(sphere, torus, rng):
    assert nonholonomity(sphere.chart, (0.2, 1.3)) == pytest.approx(1.0)
    assert nonholonomity(entry("flat").chart, (0.2, 1.3)) == 0.0
    for _ in range(10):
        p = random_point(rng, torus.chart)
        assert nonholonomity(torus.chart, p) == pytest.approx(fd_nonholonomity(torus.chart, p), abs=1e-6)


# -- tables --------------------------------------------------------------------


def test_sphere_structure_functions(sphere):
    v = 1.1
    c = lift_structure_functions(sphere.chart, (0.0, v))
    # c[k, i, j] with [E_i, E_j] = c^k_ij E_k, 0-based
    assert c[2, 0, 1] == 1.0
    assert c[2, 0, 2] == 0.0 and c[2, 1, 2] == 0.0
    assert c[0, 0, 1] == pytest.approx(math.cos(v) / math.sin(v))
    assert c[1, 0, 1] == 0.0
    assert np.array_equal(c, -np.transpose(c, (0, 2, 1)))


@pytest.mark.parametrize("K0", [0.25, 1.0, 4.0])
def test_constant_curvature_vertical_structure_vanishes(K0):
    c = lift_structure_functions(entry("sphere", {"K0": K0}).chart, (0.0, 0.7 / math.sqrt(K0)))
    assert c[2, 0, 2] == 0.0 and c[2, 1, 2] == 0.0


def test_torus_structure_functions_match_brackets(torus):
    c = lift_structure_functions(torus.chart, TORUS_Q)
    assert np.max(np.abs(c - fd_lift_structure(torus.chart, TORUS_Q, 0.7))) < 1e-6


def test_connection_fixed_entries(torus, rng):
    for p in _regular_points(rng, torus.chart, 10):
        g = lift_connection(torus.chart, p)
        assert g[0, 1, 2] == 0.5  # Gamma^1_23
        assert g[1, 0, 2] == -0.5  # Gamma^2_13
        assert g[0, 2, 1] == 0.5  # Gamma^1_32
        assert np.array_equal(g, -np.transpose(g, (2, 1, 0)))


def test_sphere_connection_vertical_terms(sphere):
    g = lift_connection(sphere.chart, (0.3, 0.9))
    assert g[0, 2, 2] == 0.0 and g[1, 2, 2] == 0.0


def test_connection_is_koszul_of_structure(torus, ellipsoid, rng):
    for chart in (torus.chart, ellipsoid.chart):
        for p in _regular_points(rng, chart, 5):
            c = lift_structure_functions(chart, p)
            assert np.max(np.abs(lift_connection(chart, p) - koszul_connection(c))) < 1e-10


@pytest.mark.parametrize("K0", [0.25, 1.0, 4.0])
def test_sphere_curvature_components(K0):
    r = lift_curvature(entry("sphere", {"K0": K0}).chart, (0.0, 1.0 / math.sqrt(K0)))
    assert r["1212"] == pytest.approx(0.75 - K0, abs=1e-12)
    assert r["1213"] == 0.0 and r["1223"] == 0.0 and r["1323"] == 0.0


def test_unit_sphere_vertical_curvature(sphere):
    r = lift_curvature(sphere.chart, (0.0, 1.0))
    assert r["1313"] == pytest.approx(-0.25, abs=1e-12)
    assert r["2323"] == pytest.approx(-0.25, abs=1e-12)


def test_torus_curvature_matches_oracle(torus):
    r = lift_curvature(torus.chart, TORUS_Q)
    fd = fd_lift_curvature(torus.chart, TORUS_Q)
    assert max(abs(r[k] - fd[k]) for k in R_HAT_KEYS) < 1e-6


def test_ellipsoid_tables_match_oracles(ellipsoid, rng):
    from wagner.oracles import table_deltas

    for p in _regular_points(rng, ellipsoid.chart, 5):
        d = table_deltas(ellipsoid.chart, p, 0.0)
        assert max(d.values()) < 1e-6


def test_curvature_tensor_symmetries(torus, rng):
    for p in _regular_points(rng, torus.chart, 5):
        R = curvature_tensor(lift_curvature(torus.chart, p))
        assert np.allclose(R, -np.transpose(R, (1, 0, 2, 3)))
        assert np.allclose(R, -np.transpose(R, (0, 1, 3, 2)))
        assert np.allclose(R, np.transpose(R, (2, 3, 0, 1)))


def test_tables_refuse_singular_points(torus):
    p = (0.0, math.pi / 2)
    for fn in (lift_structure_functions, lift_connection, lift_curvature, lifted_metric):
        with pytest.raises(SingularPoint):
            fn(torus.chart, p)


# -- metric matrices ------------------------------------------------------------


def test_metric_and_dual(torus, rng):
    for p in _regular_points(rng, torus.chart, 5):
        K = torus.chart.frame_terms(*p)[6]
        G, D = lifted_metric(torus.chart, p), lifted_metric_dual(torus.chart, p)
        assert np.allclose(G, np.diag([1, 1, 1 / K**2]))
        assert np.allclose(G @ D, np.eye(3))
        Gc, Dc = lifted_metric_coords(torus.chart, p), lifted_metric_dual_coords(torus.chart, p)
        assert np.allclose(Gc @ Dc, np.eye(3))
        M = frame_matrix(torus.chart, p)
        # the lifted frame is orthonormal
        assert np.allclose(M.T @ Gc @ M, np.eye(3))


def test_dual_degenerates_on_sigma(torus):
    p = (0.3, math.pi / 2)
    D = lifted_metric_dual(torus.chart, p)
    assert np.linalg.matrix_rank(D) == 2
    assert np.linalg.matrix_rank(lifted_metric_dual_coords(torus.chart, p)) == 2
    # continuous across the singular set
    for eps in (1e-3, 1e-5):
        assert np.allclose(lifted_metric_dual(torus.chart, (0.3, math.pi / 2 + eps)), D, atol=10 * eps)


# -- Killing fields -----------------------------------------------------------------


@pytest.mark.parametrize("field", ["V1", "V2"])
def test_killing_fields(torus, field):
    assert lie_derivative_residual(torus.chart, field, TORUS_Q, 0.4) < 1e-6


def test_non_killing_field(torus):
    def field(q):
        return np.array([q[1] ** 2, 0.0, 0.0])

    assert lie_derivative_residual(torus.chart, field, (0.4, 0.9), 0.4) > 1e-2


def test_named_fields_need_revolution_chart():
    chart = MetricChart("1", "0", "2 + sin(v)", (-1, 1), (-1, 1))
    with pytest.raises(ChartMismatch):
        lie_derivative_residual(chart, "V1", (0.0, 0.3), 0.0)


# -- singular set -------------------------------------------------------------------


def test_torus_singular_set(torus):
    info = singular_set(torus.chart)
    assert info.roots == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-10)
    assert info.kinds == ("crossing", "crossing")


def test_sphere_and_flat_singular_sets(sphere):
    assert singular_set(sphere.chart).roots == ()
    assert singular_set(entry("flat").chart).identically_zero


def test_touching_root():
    # K = -v^2 / (1 + v^4/12) vanishes at v = 0 without changing sign
    chart = RevolutionProfile("1 + v^4/12", (-1.0, 1.5), u1_period=None).chart()
    info = singular_set(chart)
    assert len(info.roots) == 1
    assert info.roots[0] == pytest.approx(0.0, abs=1e-6)
    assert info.kinds == ("touching",)


def test_singular_set_needs_revolution_chart():
    with pytest.raises(ChartMismatch):
        singular_set(MetricChart("1", "0", "1", (-1, 1), (-1, 1)))
