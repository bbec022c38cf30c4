"""Shared fixtures.

Heavy objects (families, configs, layouts) are function-independent and
cheap to build, so most fixtures are plain session-scoped constructors.
Anything expensive enough to matter lives next to the tests that need it.
"""

import numpy as np
import pytest

from scotsim import dqacm, protocol, quantum


@pytest.fixture(scope="session")
def bb84():
    return quantum.bb84_family()


@pytest.fixture(scope="session")
def equal3():
    return quantum.equal_spaced_family(3)


@pytest.fixture(scope="session")
def layout2():
    return protocol.standard_layout(2)


@pytest.fixture(scope="session")
def layout3():
    return protocol.standard_layout(3)


@pytest.fixture(scope="session")
def cfg21(bb84):
    return dqacm.DqacmConfig(m=2, n=1, family=bb84)


@pytest.fixture(scope="session")
def cfg32(equal3):
    return dqacm.DqacmConfig(m=3, n=2, family=equal3)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
