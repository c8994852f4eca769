import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from asrlint import fixtures  # noqa: E402


@pytest.fixture(scope="session")
def table1():
    return fixtures.railway_lexicon()


@pytest.fixture(scope="session")
def railway():
    return fixtures.railway_callflow()


@pytest.fixture(scope="session")
def table2():
    return fixtures.published_matrix()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


ACCEPTANCE_SEED = 0
ACCEPTANCE_TRIALS = 10_000


@pytest.fixture(scope="session")
def table1_sim(table1, railway):
    """Table 1 node, unit costs, substitution_prob=0.3, 10,000 trials per word.

    Returns ``(stats, seconds)`` so timing checks can include the simulation.
    """
    import time

    from asrlint.distance import UniformCost
    from asrlint.simulator import ConfusionChannel, simulate_node

    channel = ConfusionChannel(substitution_prob=0.3, rng_seed=ACCEPTANCE_SEED)
    start = time.perf_counter()
    stats = simulate_node(railway.nodes["service"], table1, UniformCost(), channel, ACCEPTANCE_TRIALS)
    return stats, time.perf_counter() - start
