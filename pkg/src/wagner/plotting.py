"""SVG figures: chart development, orthographic 3D view and region overlays."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["development_axes", "plot_development", "plot_3d", "plot_bands", "plot_contour", "save_svg", "new_figure"]

plt.rcParams["svg.hashsalt"] = "wagner"
_VIEW_ELEV = math.radians(30.0)
_VIEW_AZIM = math.radians(-60.0)


def new_figure(with_3d: bool):
    if with_3d:
        fig, (ax, ax3) = plt.subplots(1, 2, figsize=(11, 5))
        return fig, ax, ax3
    fig, ax = plt.subplots(figsize=(6, 5))
    return fig, ax, None


def _split_wrapped(u1, u2, chart):
    """Insert NaNs where a periodic coordinate wraps so lines do not jump."""
    x, y = np.array(u1, dtype=float), np.array(u2, dtype=float)
    for i in range(len(x)):
        x[i], y[i] = chart.wrap(x[i], y[i])
    breaks = np.zeros(len(x) - 1, dtype=bool) if len(x) > 1 else np.zeros(0, dtype=bool)
    for vals, per in ((x, chart.u1_period), (y, chart.u2_period)):
        if per is not None and len(vals) > 1:
            breaks |= np.abs(np.diff(vals)) > 0.5 * per
    idx = np.nonzero(breaks)[0] + 1
    return np.insert(x, idx, np.nan), np.insert(y, idx, np.nan)


def development_axes(ax, chart) -> None:
    lo1, hi1 = chart._sample_bounds(1)
    lo2, hi2 = chart._sample_bounds(2)
    if chart.u1_period is not None or math.isfinite(chart.u1_domain[0]):
        ax.set_xlim(lo1, hi1)
    if chart.u2_period is not None or math.isfinite(chart.u2_domain[0]):
        ax.set_ylim(lo2, hi2)
    ax.set_xlabel("u1")
    ax.set_ylabel("u2")


def plot_development(ax, trajectories, labels, chart, sigma=None) -> None:
    for traj, label in zip(trajectories, labels):
        x, y = _split_wrapped(traj.u1, traj.u2, chart)
        ax.plot(x, y, lw=1.0, label=label)
        ax.plot([x[0]], [y[0]], "k.", ms=4)
    for s in sigma or ():
        ax.axhline(s, color="0.5", lw=0.8, ls="--")
    development_axes(ax, chart)
    if any(labels):
        ax.legend(fontsize=8, loc="upper right")


def _project(P: np.ndarray) -> np.ndarray:
    ca, sa = math.cos(_VIEW_AZIM), math.sin(_VIEW_AZIM)
    ce, se = math.cos(_VIEW_ELEV), math.sin(_VIEW_ELEV)
    x = ca * P[..., 0] + sa * P[..., 1]
    y = -sa * se * P[..., 0] + ca * se * P[..., 1] + ce * P[..., 2]
    return np.stack([x, y], axis=-1)


def plot_3d(ax, trajectories, labels, embed, chart, n_lines: int = 24) -> None:
    """Fixed orthographic view: parameter-line wireframe plus the curves."""
    lo1, hi1 = chart._sample_bounds(1)
    lo2, hi2 = chart._sample_bounds(2)
    s = np.linspace(0.0, 1.0, 120)
    for a in np.linspace(lo1, hi1, n_lines, endpoint=chart.u1_period is None):
        P = np.array([embed(a, lo2 + (hi2 - lo2) * t) for t in s])
        q = _project(P)
        ax.plot(q[:, 0], q[:, 1], color="0.85", lw=0.5)
    for b in np.linspace(lo2, hi2, n_lines // 2, endpoint=chart.u2_period is None):
        P = np.array([embed(lo1 + (hi1 - lo1) * t, b) for t in s])
        q = _project(P)
        ax.plot(q[:, 0], q[:, 1], color="0.85", lw=0.5)
    for traj, label in zip(trajectories, labels):
        P = np.array([embed(u, v) for u, v in zip(traj.u1, traj.u2)])
        q = _project(P)
        ax.plot(q[:, 0], q[:, 1], lw=1.0, label=label)
    ax.set_aspect("equal")
    ax.axis("off")


def plot_bands(ax, bands, chart, color="tab:green") -> None:
    lo1, hi1 = chart._sample_bounds(1)
    lo2, hi2 = chart._sample_bounds(2)
    per = chart.u2_period
    for a, b in bands:
        ax.axhspan(a, min(b, hi2), color=color, alpha=0.15, lw=0)
        if per is not None and b > hi2:
            ax.axhspan(lo2, b - per, color=color, alpha=0.15, lw=0)


def plot_contour(ax, U1, U2, Kgrid, level, color="0.4") -> None:
    ax.contourf(U1, U2, np.abs(Kgrid), levels=[0.0, level], colors=[color], alpha=0.2)
    ax.contour(U1, U2, np.abs(Kgrid), levels=[level], colors=[color], linewidths=2.0)


def save_svg(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
