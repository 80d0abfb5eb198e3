import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    def _record(number: int, passed: bool, detail: str) -> None:
        prev = ACCEPTANCE.get(number)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}"
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
