import pytest

# criterion id -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(key: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[key] = (bool(passed), detail)
        print(f"criterion {key:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return bool(passed)

    return _record
