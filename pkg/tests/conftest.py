import re

import pytest
from hypothesis import settings

settings.register_profile("hyperloss", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("hyperloss")

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion; printed in the terminal summary."""

    def record(number, passed, detail):
        number = str(number)
        _ACCEPTANCE[number] = f"criterion {number:>3}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(key):
        m = re.match(r"(\d+)(.*)", key)
        return int(m.group(1)), m.group(2)

    for k in sorted(_ACCEPTANCE, key=order):
        terminalreporter.write_line(_ACCEPTANCE[k])
