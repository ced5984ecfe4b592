import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running experiment reproduction")
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """verdict(name, ok, detail) records one acceptance line and prints it at the end of the run."""
    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        request.config.stash[_VERDICTS].append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
