import pytest

# one line per acceptance criterion, printed at the end of the session
LINES = []


@pytest.fixture
def criterion():
    def record(label: str, ok: bool, detail: str = "", elapsed: float = None):
        t = "" if elapsed is None else f" [{elapsed:.2f} s]"
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}{t} {detail}".rstrip()
        LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
