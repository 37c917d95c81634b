import pytest

# criterion number -> (passed, description, measured detail)
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, description: str, detail: str) -> None:
        ACCEPTANCE[number] = (bool(passed), description, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, description, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {description} | {detail}")
