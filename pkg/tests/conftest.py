import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from scaling_lab.fbm_env import GridSpec, sample_fbm_circulant
from scaling_lab.targets import (LocalisationParams, OscParams, build_gaussian, build_mala_rough,
                                 build_oscillatory, build_rwm_rough, normalize_and_tabulate)

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def small_path():
    """H=0.5 path on [-9, 9] with 20001 nodes (spacing 9e-4)."""
    return sample_fbm_circulant(GridSpec(-9.0, 9.0, 20_001), 0.5, seed=12)


@pytest.fixture(scope="session")
def rough_rwm(small_path):
    return normalize_and_tabulate(build_rwm_rough(small_path))


@pytest.fixture(scope="session")
def rough_mala(small_path):
    return normalize_and_tabulate(build_mala_rough(small_path, LocalisationParams(0.1, 0.5)))


@pytest.fixture(scope="session")
def osc_rwm():
    return normalize_and_tabulate(build_oscillatory("rwm_osc", OscParams(0.25, 30.0)))


@pytest.fixture(scope="session")
def osc_mala():
    return normalize_and_tabulate(build_oscillatory("mala_osc", OscParams(0.9, 5.0)))


@pytest.fixture(scope="session")
def gaussian():
    return normalize_and_tabulate(build_gaussian())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    def _report(number: int, ok: bool, detail: str, seconds: float):
        ACCEPTANCE_LINES[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail} ({seconds:.1f} s)"
        print(ACCEPTANCE_LINES[number])
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
