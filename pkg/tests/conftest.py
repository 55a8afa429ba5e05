import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def add(criterion: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append((criterion, "PASS" if ok else "FAIL", detail))

    return add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, verdict, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {criterion}: {verdict}  {detail}")
