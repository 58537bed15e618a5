import numpy as np
import pytest

from ehor.analysis import analyze
from ehor.montecarlo import SimConfig, run_simulation
from ehor.scenario import buffer_study_scenario, reference_scenario

# lines collected by the acceptance suite, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


MC_SLOTS = 1_010_000  # 10^6 measured slots after the default 10^4 warmup
MC_SEED = 1


@pytest.fixture(scope="session")
def ref_scenario():
    return reference_scenario(12.0)


@pytest.fixture(scope="session")
def ref_report(ref_scenario):
    return analyze(ref_scenario)


@pytest.fixture(scope="session")
def ref_sim(ref_scenario):
    return run_simulation(ref_scenario, SimConfig(slots=MC_SLOTS, seed=MC_SEED))


@pytest.fixture(scope="session")
def buffer_case():
    sc = buffer_study_scenario(12.0)
    return sc, analyze(sc), run_simulation(sc, SimConfig(slots=MC_SLOTS, seed=MC_SEED))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
