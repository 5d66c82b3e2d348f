import numpy as np
import pytest

from voxmap.grid import GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_spec():
    return GridSpec((0.6, 0.45, 0.3), 0.15, (4, 3, 2))


@pytest.fixture
def standard_spec():
    return GridSpec.from_size((15.0, 15.0, 3.0), 0.15)


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call" or not item.name.startswith("test_criterion_"):
        return
    detail = getattr(item.module, "DETAILS", {}).get(item.name)
    if detail is None and rep.failed:
        detail = f"error: {call.excinfo.typename}: {call.excinfo.value}" if call.excinfo else "error"
    number = int(item.name.split("_")[2])
    title = " ".join(item.name.split("_")[3:])
    _ACCEPTANCE.append((number, title, "PASS" if rep.passed else "FAIL", detail or ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title} -- {detail}")
