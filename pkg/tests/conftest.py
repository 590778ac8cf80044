import numpy as np
import pytest

from simerr.estimation import EstimandSpec

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion(request):
    """Record one acceptance line; the outcome is the test's own pass/fail."""
    state = {}

    def record(name: str, detail: str = "") -> None:
        state["name"] = name
        state["detail"] = detail

    yield record
    if "name" in state:
        failed = getattr(request.node, "_acceptance_failed", False)
        _ACCEPTANCE.append((state["name"], not failed, state["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed:
        item._acceptance_failed = True


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def mixture_spec():
    return EstimandSpec(("x",), (("x", 0.1), ("x", 0.9)))

