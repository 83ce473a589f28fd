import re

import pytest

_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA.append((mark.args[0], mark.args[1], "PASS" if rep.passed else "FAIL", detail))


def _order(c):
    num, rest = re.match(r"(\d+)(.*)", c[0]).groups()
    return int(num), rest


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, title, verdict, detail in sorted(_CRITERIA, key=_order):
        line = f"criterion {label:<3} {verdict}  {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
