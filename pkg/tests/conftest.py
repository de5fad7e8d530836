import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qcof", deadline=None, max_examples=100)
settings.load_profile("qcof")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_force_min(gram, p, box):
    """Exhaustive min of ||Lfac^T a||^2 over 0 < ||a||_inf <= box."""
    L = gram.h.size
    r = np.arange(-box, box + 1)
    grid = np.stack(np.meshgrid(*([r] * L), indexing="ij"), axis=-1).reshape(-1, L)
    grid = grid[np.any(grid != 0, axis=1)]
    if p is not None:
        grid = grid[np.any(np.mod(grid, p) != 0, axis=1)]
    vals = gram.norm_sq(grid)
    i = int(np.argmin(vals))
    return grid[i], float(vals[i])


# acceptance criteria append (name, passed, detail) here; the summary prints one line each
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
