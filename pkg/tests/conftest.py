from functools import lru_cache

import pytest

from resurge.series import borel_transform, builtin_ode, derive_coefficients


@lru_cache(maxsize=None)
def borel(name: str, order: int):
    return borel_transform(derive_coefficients(builtin_ode(name), order))


@pytest.fixture(scope="session")
def simple_borel():
    return borel("ode-simple", 40)


@pytest.fixture(scope="session")
def branch_borel():
    return borel("ode-branch", 40)


@pytest.fixture(scope="session")
def prototype_borel():
    return borel("prototype", 101)


# acceptance criteria report one line each in the terminal summary
CRITERIA: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
