import numpy as np
import pytest

from edgelink.lattice import SystemSpec, build_system
from edgelink.spectral import classify_states, diagonalize, edge_window
from edgelink.symmetry import classify_parity

_ACCEPTANCE_LINES = []


def isolated(L):
    return classify_parity(classify_states(diagonalize(build_system(SystemSpec.square(L, qubits=False)))))


def full(L, eps, g, eps2=None, g2=None):
    spec = SystemSpec.square(L, qubits=False).with_qubits(eps, g, eps2, g2)
    return diagonalize(build_system(spec))


@pytest.fixture(scope="session")
def iso21():
    return isolated(21)


@pytest.fixture(scope="session")
def iso31():
    return isolated(31)


@pytest.fixture(scope="session")
def iso35():
    return isolated(35)


@pytest.fixture(scope="session")
def cal35(iso35):
    return edge_window(iso35, -1.75)


@pytest.fixture(scope="session")
def cal21(iso21):
    return edge_window(iso21, -1.76)


@pytest.fixture(scope="session")
def cal31(iso31):
    return edge_window(iso31, -1.75)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def acceptance_report():
    def report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
