import numpy as np
import pytest

from snfe import InitialHistory, find_stationary, paper_model, write_snapshot


@pytest.fixture(scope="session")
def bench():
    return paper_model()


@pytest.fixture(scope="session")
def one_bump(bench):
    return find_stationary(bench, 0.02, InitialHistory("zero"))


@pytest.fixture(scope="session")
def one_bump_file(tmp_path_factory, bench, one_bump):
    path = tmp_path_factory.mktemp("snap") / "one_bump.txt"
    write_snapshot(path, bench.grid, 0.0, one_bump.field)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(number, ok, detail):
        lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(lines[-1])

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
