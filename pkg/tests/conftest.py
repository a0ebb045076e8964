import json
import sys
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def click_log_lines():
    return (DATA / "clicks.jsonl").read_text().splitlines()


@pytest.fixture(scope="session")
def click_log_events(click_log_lines):
    out = []
    for line in click_log_lines:
        obj = json.loads(line)
        out.append((obj["site"], obj["link"], obj["ts"]))
    return out


ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
