import hypothesis
import numpy as np
import pytest

from adtrca.linalg import set_residual_checks
from adtrca.synth import SynthConfig, generate

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

# Every generalized eigen-solve made under test verifies its own residual.
set_residual_checks(True)

_criteria = []


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome for the end-of-run summary."""
    def record(label, passed, detail=""):
        _criteria.append((label, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _criteria:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n_channels=3, n_blocks=4, snr_db=0.0, mixing_seed=3, noise_seed=4))
