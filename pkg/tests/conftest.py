import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from creepdam.geometry import Mesh, structured_rect_mesh
from creepdam.material import MaterialParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def unit_square():
    return structured_rect_mesh(1.0, 1.0, 4, 4)


@pytest.fixture
def one_triangle():
    return Mesh.from_arrays([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


@pytest.fixture
def damage_material():
    """Elasticity plus damage, no creep; stress 1 at a stretch of 1e-3."""
    return MaterialParams(E=1000.0, nu=0.3, A=0.0, B=1.0, m=2.0, qd=1.0)


def uniaxial_u(mesh, stretch=1e-3, nu=0.3):
    """Displacement of a uniform uniaxial stress ``E * stretch`` along y."""
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    return np.column_stack([-nu * stretch * x, stretch * y])


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" in report.nodeid and name.startswith("test_criterion_"):
        if report.when == "call" or report.outcome != "passed":
            _CRITERIA[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        number, label = name[len("test_criterion_"):].split("_", 1)
        verdict = "PASS" if _CRITERIA[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(number):2d} {label:<28} {verdict}")
