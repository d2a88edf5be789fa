import pytest

ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a criterion number; its outcome is printed in the terminal summary."""
    def mark(n: int, title: str):
        request.node.criterion = (n, title)
    return mark


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = getattr(item, "criterion", None)
    if crit is not None and rep.when == "call":
        ACCEPTANCE[crit] = rep.passed
    elif crit is not None and rep.failed:
        ACCEPTANCE[crit] = False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), ok in sorted(ACCEPTANCE.items()):
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
