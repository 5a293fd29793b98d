import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synthetic  # noqa: E402


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    return synthetic.write_dataset(tmp_path_factory.mktemp("toy"), seed=0)


ACCEPTANCE = {}


def record_criterion(name, passed, detail=""):
    ACCEPTANCE[name] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (passed, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
