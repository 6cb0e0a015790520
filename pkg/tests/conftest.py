import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fairiv.simulate import DgpConfig, generate_sample  # noqa: E402


@pytest.fixture(scope="session")
def small_sample():
    return generate_sample(DgpConfig(n=120, seed=3))


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
