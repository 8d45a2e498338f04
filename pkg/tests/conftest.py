from __future__ import annotations

import math
import re

import numpy as np
import pytest

from wagner.catalog import entry
from wagner.integrators import IntegratorConfig


@pytest.fixture(scope="session")
def sphere():
    return entry("sphere", {"K0": 1.0})


@pytest.fixture(scope="session")
def torus():
    return entry("torus", {"R": 2.0, "r": 1.0})


@pytest.fixture(scope="session")
def ellipsoid():
    return entry("ellipsoid", {"a": 1.0, "b": 1.5, "c": 2.0})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cfg(t1, tol=1e-10, **kw):
    return IntegratorConfig(abs_tol=tol, rel_tol=tol, t_span=(0.0, t1), **kw)


def random_point(rng, chart, margin=0.05):
    lo, hi = chart._sample_bounds(2)
    span = hi - lo
    return float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(lo + margin * span, hi - margin * span))


# -- acceptance summary -----------------------------------------------------------

_CRITERIA: dict[int, list[bool]] = {}
_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    if report.when == "call" or report.failed:
        _CRITERIA.setdefault(int(m.group(1)), []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        verdict = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict} ({sum(results)}/{len(results)} checks)")
