"""Lifted metrics on the orthonormal frame bundle of a surface.

Library layout: ``expr`` (expressions and jets), ``geomcore`` (frames and
curvature on a chart), ``lift`` (lifted frame tables), ``ode`` (geodesic
integration), ``revolution`` (first integrals and related checks),
``catalog`` (built-in surfaces) and ``cli``.
"""

from .catalog import builtin, entry
from .errors import ConfigError, NumericalError, WagnerError
from .geomcore import EmbeddingChart, MetricChart, RevolutionChart
from .integrators import IntegratorConfig
from .ode import (
    LiftedState,
    ProjectedState,
    Trajectory,
    detect_sigma_crossings,
    integrate_lifted,
    integrate_projected,
    lift_solution,
)
from .revolution import RevolutionProfile

__version__ = "0.1.0"

__all__ = [
    "builtin",
    "entry",
    "ConfigError",
    "NumericalError",
    "WagnerError",
    "EmbeddingChart",
    "MetricChart",
    "RevolutionChart",
    "IntegratorConfig",
    "LiftedState",
    "ProjectedState",
    "Trajectory",
    "detect_sigma_crossings",
    "integrate_lifted",
    "integrate_projected",
    "lift_solution",
    "RevolutionProfile",
]
