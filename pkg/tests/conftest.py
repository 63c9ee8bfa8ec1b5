import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from specprop.riemann_circle import (  # noqa: E402
    PolyMetricPath,
    circle_family,
    circle_geometry,
    continuity_experiment,
    family_grid,
)
from specprop.spectral_family import track_eigenpairs  # noqa: E402

T_GRID = [0.025, 0.05, 0.1, 0.2]
EPSILONS = [0.5, 0.25, 0.1]

# acceptance criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def conformal_path():
    return PolyMetricPath.conformal(512, 1.0, 0.5)


@pytest.fixture(scope="session")
def conformal_family(conformal_path):
    return circle_family(conformal_path, family_grid(T_GRID))


@pytest.fixture(scope="session")
def conformal_geometry(conformal_path):
    return circle_geometry(conformal_path)


@pytest.fixture(scope="session")
def conformal_experiment(conformal_path, conformal_family):
    return continuity_experiment(conformal_path, T_GRID, EPSILONS, family=conformal_family)


@pytest.fixture(scope="session")
def small_circle():
    """64-point non-conformal path with its tracked family."""
    x = 2 * np.pi * np.arange(64) / 64
    h0 = 1 + 0.3 * np.cos(x)
    path = PolyMetricPath(np.array([h0, 0.3 * h0 + 0.05 * np.sin(2 * x)]))
    fam = circle_family(path, family_grid([0.05, 0.1, 0.2]), keep=None)
    return path, fam


@pytest.fixture(scope="session")
def constant_toy():
    return track_eigenpairs(lambda t: np.diag([0.5, 1.5]).astype(complex), np.linspace(0, 1, 11))


@pytest.fixture(scope="session")
def crossing_toy():
    return track_eigenpairs(lambda t: np.diag([1 + t, 2 - t]).astype(complex), np.linspace(0, 1, 21))
