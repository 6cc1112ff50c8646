import sys

import pytest

from halfspace.discrete_kernels import KernelWorkspace


@pytest.fixture(scope="session")
def ws():
    return KernelWorkspace(256)


@pytest.fixture(scope="session")
def ws_big():
    return KernelWorkspace(10_000)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
