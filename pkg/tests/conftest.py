import numpy as np
import pytest

from fracpx import ProblemData

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_log():
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""

    def record(name: str, passed: bool, detail: str = "") -> None:
        _ACCEPTANCE[name] = (bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def reference_1d():
    """The fixed 1D instance: n=16, s=0.5, p=q=2, r=1.5, lambda=10."""
    return ProblemData.build([[0.0, 1.0]], 1 / 16, 0.5,
                             {"kind": "constant", "value": 2.0},
                             {"kind": "constant", "value": 1.5}, 10.0)


@pytest.fixture(scope="session")
def variable_1d():
    return ProblemData.build([[0.0, 1.0]], 1 / 16, 0.5,
                             {"kind": "affine", "base": 1.7, "slope": 0.6},
                             {"kind": "affine", "base": 1.3, "slope": 0.2}, 10.0)


@pytest.fixture(scope="session")
def one_node():
    """Three cells on (0,1): the middle one is the only unknown."""
    return ProblemData.build([[0.0, 1.0]], 1 / 3, 0.5,
                             {"kind": "constant", "value": 2.0},
                             {"kind": "constant", "value": 1.5}, 10.0)
