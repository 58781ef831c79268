import numpy as np
import pytest

from spde_ldp import ModelSpec, OperatorSpec

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = mark.args
    details = [v for k, v in item.user_properties if k == "detail"]
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    _CRITERIA[number] = f"criterion {number:>2} [{status}] {title}" + (
        f" :: {'; '.join(details)}" if details else "")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])


@pytest.fixture
def detail(record_property):
    """Attach a human-readable measurement to the acceptance summary line."""
    def add(text):
        record_property("detail", text)
    return add


@pytest.fixture
def ou4():
    return ModelSpec(OperatorSpec.from_decay(4, 2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
