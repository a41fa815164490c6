import pytest

from stfem import problems
from stfem.mesh import generate_fitted_mesh_1d, kuhn_cube_mesh

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ex1():
    return problems.example1()


@pytest.fixture(scope="session")
def ex2():
    return problems.example2()


@pytest.fixture(scope="session")
def smooth():
    return problems.smooth_verification_3d()


@pytest.fixture(scope="session")
def ex1_mesh10(ex1):
    return generate_fitted_mesh_1d(10, ex1.curves)


@pytest.fixture(scope="session")
def ex2_mesh20(ex2):
    return generate_fitted_mesh_1d(20, ex2.curves)


@pytest.fixture(scope="session")
def kuhn4():
    return kuhn_cube_mesh(4)


@pytest.fixture
def criterion():
    """Record a one-line PASS/FAIL verdict for the acceptance summary."""
    def record(number, name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}"
        if detail:
            line += f" -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
