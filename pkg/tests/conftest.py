import numpy as np
import pytest
from hypothesis import settings

from dynembed.graph import Snapshot

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def snap(edges, t=0, weights=None, nodes=None):
    return Snapshot.from_edges(t, np.array(edges, dtype=np.int64).reshape(-1, 2), weights, nodes)


@pytest.fixture
def path4():
    return snap([(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def barbell4():
    left = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    right = [(a + 4, b + 4) for a, b in left]
    return snap(left + right + [(3, 4)])


# acceptance criteria append (criterion, passed, detail) here; printed at the end of the run
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: int(r[0].split()[1])):
        terminalreporter.write_line(f"{status:4}  {name}: {detail}")
