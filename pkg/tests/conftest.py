import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fuzzykuma import kuma  # noqa: E402
from fuzzykuma.fuzzy import FuzzySample, default_fis, fuzzify  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"

_acceptance_lines = []


@pytest.fixture
def record_acceptance():
    def record(number, passed, detail):
        line = f"[acceptance {number}] {'PASS' if passed else 'FAIL'}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def truth():
    return kuma.KumaParams(2.0, 3.0)


@pytest.fixture(scope="session")
def fuzzy_sample(truth):
    x = kuma.sample(200, truth, 1234)
    return fuzzify(x, default_fis(), 99)


@pytest.fixture(scope="session")
def crisp_values(truth):
    return kuma.sample(200, truth, 4321)


@pytest.fixture(scope="session")
def crisp_sample(crisp_values):
    return FuzzySample.crisp(crisp_values)


@pytest.fixture(scope="session")
def data_dir():
    return DATA
