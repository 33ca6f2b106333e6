import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from otbary.grid import GridSpec, normalize

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CORNERS = ((0.2, 0.2), (0.2, 0.8), (0.8, 0.2), (0.8, 0.8))


def disk(grid: GridSpec, center, radius=0.15):
    x, y = grid.coords()
    return normalize(((x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius**2).astype(float), 0.0, grid)


def gaussian_blob(grid: GridSpec, center, width):
    x, y = grid.coords()
    raw = np.exp(-0.5 * ((x - center[0]) ** 2 + (y - center[1]) ** 2) / width**2)
    return normalize(raw, 0.0, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


CRITERIA_KEY = pytest.StashKey[list]()


@pytest.fixture
def record_criterion(request):
    """Print and keep one ``criterion: PASS/FAIL`` line for the terminal summary."""
    lines = request.config.stash.setdefault(CRITERIA_KEY, [])

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if passed else 'FAIL'} {detail}"
        print(line)
        lines.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(".")[0])):
            terminalreporter.write_line(line)
