import numpy as np
import pytest

from fitwire.mesh import RectilinearGrid, graded_axis


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    # nonuniform on purpose so that no measure is accidentally symmetric
    return RectilinearGrid([0.0, 0.3, 0.5, 1.0], [0.0, 0.25, 1.0], [0.0, 0.1, 0.6, 0.8, 1.0])


@pytest.fixture
def cube_grid():
    ax = graded_axis(0.0, 1.0, 0.5, 4, 0.5)
    return RectilinearGrid(ax, ax, np.linspace(0.0, 1.0, 9))


_REPORT = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_REPORT, [])

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
