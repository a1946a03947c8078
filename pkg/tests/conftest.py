import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from biased_order.measure import DiscreteMeasure, make_measure  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture
def sym():
    return make_measure([(-1, 0.5), (1, 0.5)])


@pytest.fixture
def two_piece():
    return make_measure([(2, 0.5), (-1, 0.25), (-3, 0.25)])


@pytest.fixture
def dirac0():
    return DiscreteMeasure.dirac(0.0)


locations = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 3))
masses = st.floats(0.01, 1.0)


@st.composite
def probability_measures(draw, min_atoms=1, max_atoms=8):
    n = draw(st.integers(min_atoms, max_atoms))
    xs = draw(st.lists(locations, min_size=n, max_size=n, unique=True))
    ws = np.array(draw(st.lists(masses, min_size=n, max_size=n)))
    return DiscreteMeasure(np.array(xs), ws / ws.sum())


@st.composite
def seeds(draw):
    return np.random.default_rng(draw(st.integers(0, 2**32 - 1)))


betas = st.floats(0.05, 0.95)


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
