import numpy as np
import pytest

from diffquad.spaces import circle_space, sphere2_space, torus2_space


@pytest.fixture(scope="session")
def circle():
    return circle_space(256)


@pytest.fixture(scope="session")
def circle_big():
    return circle_space(1100)


@pytest.fixture(scope="session")
def torus():
    return torus2_space(16)


@pytest.fixture(scope="session")
def sphere():
    return sphere2_space(16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one ``(number, passed, detail)`` entry per acceptance criterion."""
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
