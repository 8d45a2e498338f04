"""Figure recipes: trajectories, SVG and a JSON report of programmatic checks.

1  torus, one start on the outer equator, C = 0, 1, 2, 3
2  torus, C = 1, one point, eight directions
3  torus, C = 3, start on a zero-curvature parallel; curvature band confinement
4  ellipsoid (1, 1.5, 2), C = 20, start at the point of least curvature
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .catalog import entry
from .integrators import IntegratorConfig
from .io import write_csv, write_json
from .ode import ProjectedState, integrate_projected
from .plotting import new_figure, plot_3d, plot_bands, plot_contour, plot_development, save_svg
from .revolution import forbidden_region

__all__ = ["RECIPES", "run_figure", "region_grid"]

BOUND_SLACK = 1e-7


def _cfg(t1: float, tol: float = 1e-10) -> IntegratorConfig:
    return IntegratorConfig(abs_tol=tol, rel_tol=tol, t_span=(0.0, t1), h_max=0.2)


def region_grid(chart, n: int = 60):
    """Curvature on an ``n`` x ``n`` grid covering the chart."""
    lo1, hi1 = chart._sample_bounds(1)
    lo2, hi2 = chart._sample_bounds(2)
    u = np.linspace(lo1, hi1, n)
    v = np.linspace(lo2, hi2, n)
    U1, U2 = np.meshgrid(u, v)
    K = np.vectorize(lambda a, b: chart.frame_terms(a, b)[6])(U1, U2)
    return U1, U2, K


def fig1(outdir: Path) -> dict:
    cat = entry("torus", {"R": 2, "r": 1})
    init = ProjectedState.from_angle(0.0, 0.0, 0.0)
    trajs, checks = [], {}
    for C in (0, 1, 2, 3):
        tr = integrate_projected(cat.chart, init, C, _cfg(20.0))
        write_csv(tr, outdir / f"fig1_C{C}.csv")
        trajs.append(tr)
    dev = [float(np.max(np.abs(tr.u2 - tr.u2[0]))) for tr in trajs]
    checks["equator_max_u2_deviation"] = dev[0]
    checks["equator_is_geodesic"] = dev[0] < 1e-8
    checks["charged_leave_equator"] = all(d > 1e-3 for d in dev[1:])
    fig, ax, ax3 = new_figure(True)
    labels = [f"C={C}" for C in (0, 1, 2, 3)]
    plot_development(ax, trajs, labels, cat.chart, cat.sigma)
    plot_3d(ax3, trajs, labels, cat.embed, cat.chart)
    save_svg(fig, outdir / "fig1.svg")
    checks["passed"] = checks["equator_is_geodesic"] and checks["charged_leave_equator"]
    return checks


def fig2(outdir: Path) -> dict:
    cat = entry("torus", {"R": 2, "r": 1})
    angles = [k * math.pi / 4 for k in range(8)]
    trajs = []
    for k, a in enumerate(angles):
        tr = integrate_projected(cat.chart, ProjectedState.from_angle(0.0, 0.5, a), 1.0, _cfg(10.0))
        write_csv(tr, outdir / f"fig2_dir{k}.csv")
        trajs.append(tr)
    starts = np.array([[tr.u1[0], tr.u2[0]] for tr in trajs])
    ends = np.array([[tr.u1[-1], tr.u2[-1]] for tr in trajs])
    gaps = [float(np.linalg.norm(ends[i] - ends[j])) for i in range(8) for j in range(i + 1, 8)]
    checks = {
        "common_start": bool(np.ptp(starts, axis=0).max() == 0.0),
        "min_endpoint_separation": min(gaps),
    }
    checks["fanning"] = checks["min_endpoint_separation"] > 1e-3
    fig, ax, ax3 = new_figure(True)
    labels = [f"{a / math.pi:.2f}pi" for a in angles]
    plot_development(ax, trajs, labels, cat.chart, cat.sigma)
    plot_3d(ax3, trajs, labels, cat.embed, cat.chart)
    save_svg(fig, outdir / "fig2.svg")
    checks["passed"] = checks["common_start"] and checks["fanning"]
    return checks


def fig3(outdir: Path) -> dict:
    cat = entry("torus", {"R": 2, "r": 1})
    C = 3.0
    init = ProjectedState.from_angle(0.0, math.pi / 2, math.pi / 4)
    tr = integrate_projected(cat.chart, init, C, _cfg(100.0))
    write_csv(tr, outdir / "fig3.csv")
    region = forbidden_region(cat.profile, init, C)
    K = tr.diagnostics["K"]
    checks = {
        "K_max": region.K_max,
        "bands": [list(b) for b in region.bands],
        "max_abs_K": float(np.max(np.abs(K))),
        "bound_holds": bool(np.all(np.abs(K) <= region.K_max + BOUND_SLACK)),
        "inside_band": all(region.contains(v) for v in tr.u2),
        "band_holds_sigma": all(region.contains(s) for s in cat.sigma),
        "sigma_crossings": len(tr.crossings),
    }
    fig, ax, ax3 = new_figure(True)
    plot_bands(ax, region.bands, cat.chart)
    plot_development(ax, [tr], [f"C={C:g}"], cat.chart, cat.sigma)
    plot_3d(ax3, [tr], [""], cat.embed, cat.chart)
    save_svg(fig, outdir / "fig3.svg")
    checks["passed"] = checks["bound_holds"] and checks["inside_band"] and checks["band_holds_sigma"]
    return checks


def fig4(outdir: Path) -> dict:
    cat = entry("ellipsoid", {"a": 1, "b": 1.5, "c": 2})
    chart = cat.chart
    C = 20.0
    u1, u2 = cat.min_curvature_point
    init = ProjectedState.from_angle(u1, u2, 0.0)
    tr = integrate_projected(chart, init, C, _cfg(10.0, 1e-9))
    write_csv(tr, outdir / "fig4.csv")
    K0 = chart.frame_terms(u1, u2)[6]
    K_max = math.sqrt(1.0 + (C * K0) ** 2) / abs(C)
    K = tr.diagnostics["K"]
    U1, U2, Kg = region_grid(chart)
    grid_min = float(Kg.min())
    checks = {
        "start": [u1, u2],
        "K_start": K0,
        "start_is_grid_minimum": K0 <= grid_min + 1e-12,
        "K_max": K_max,
        "max_abs_K": float(np.max(np.abs(K))),
        "inside_region": bool(np.all(np.abs(K) <= K_max + BOUND_SLACK)),
    }
    fig, ax, ax3 = new_figure(True)
    plot_contour(ax, U1, U2, Kg, K_max)
    plot_development(ax, [tr], [f"C={C:g}"], chart)
    plot_3d(ax3, [tr], [""], cat.embed, chart)
    save_svg(fig, outdir / "fig4.svg")
    checks["passed"] = checks["start_is_grid_minimum"] and checks["inside_region"]
    return checks


RECIPES = {1: fig1, 2: fig2, 3: fig3, 4: fig4}


def run_figure(number: int, outdir) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    checks = RECIPES[number](outdir)
    write_json({"figure": number, "checks": checks}, outdir / f"fig{number}.json")
    return checks
