import numpy as np
import pytest

_RESULTS = []


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line immediately and keep it for the session summary."""

    def _report(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f" | {detail}" if detail else "")
        _RESULTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
