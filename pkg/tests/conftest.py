import pytest

from trippricing import equilibrium as eq
from trippricing import netmodel as nm


@pytest.fixture(scope="session")
def car_only():
    return nm.builtin("nd-car-only")


@pytest.fixture(scope="session")
def multimodal():
    return nm.builtin("nd-multimodal")


@pytest.fixture(scope="session")
def two_link():
    return nm.builtin("two-link")


@pytest.fixture(scope="session")
def car_only_ref(car_only):
    return eq.solve_sue(car_only)


@pytest.fixture(scope="session")
def multimodal_ref(multimodal):
    return eq.solve_sue(multimodal)


_VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def verdict():
    """Record one pass/fail line per acceptance criterion; lines are echoed at the end of the run."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
