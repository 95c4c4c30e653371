import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def ball_points(draw, n: int, radius: float = 0.95):
    """A point of the open ball of the given radius in dimension ``n``."""
    v = np.array(draw(st.lists(st.floats(-1.0, 1.0), min_size=n, max_size=n)))
    scale = draw(st.floats(0.0, radius))
    norm = np.linalg.norm(v)
    if norm < 1e-8:
        return np.zeros(n)
    return scale * v / norm


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_ball(rng, count: int, n: int, radius: float) -> np.ndarray:
    v = rng.standard_normal((count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius * rng.random((count, 1)) ** (1.0 / n)


#: Outcome per acceptance criterion, filled by tests/test_acceptance.py.
CRITERIA: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
