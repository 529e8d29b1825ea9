import re

import pytest

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome != "passed":
        prev = _ACCEPTANCE.get(name)
        if prev is None or prev == "PASS":
            _ACCEPTANCE[name] = "PASS" if report.outcome == "passed" else "FAIL"


def _key(name: str):
    m = re.search(r"criterion_(\d+)", name)
    return (int(m.group(1)) if m else 99, name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=_key):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]}  {name}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
