import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def emit(num, ok, text):
        tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{tag}] criterion {num}: {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
