import numpy as np
import pytest

from contact_mfg import ContactModel, Coupling, GridMeasure, PeriodicGrid, WrappedGaussian

_ACCEPTANCE = []


@pytest.fixture
def grid128():
    return PeriodicGrid(128)


@pytest.fixture
def cosine():
    return ContactModel.cosine()


@pytest.fixture
def flat():
    return ContactModel.flat()


@pytest.fixture
def zero():
    return Coupling()


@pytest.fixture
def kernel_coupling():
    return Coupling(strength=0.5, kernel=WrappedGaussian(0.1))


@pytest.fixture
def uniform128(grid128):
    return GridMeasure.uniform(grid128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
