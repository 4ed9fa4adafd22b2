import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

#: (passed, line) for every acceptance criterion evaluated in this session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
