import pytest

from ion_ifo.core import NM, make_config
from ion_ifo.trajectory import design_alpha_A, design_alpha_B, sensitivity

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cfg():
    return make_config()


@pytest.fixture(scope="session")
def traj_a(cfg):
    return design_alpha_A(cfg, 135 * NM)


@pytest.fixture(scope="session")
def traj_b(cfg, traj_a):
    return design_alpha_B(cfg, sensitivity(traj_a), 75 * NM)


@pytest.fixture
def report_criterion():
    """Record a one-line acceptance verdict, printed again in the terminal summary."""

    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
