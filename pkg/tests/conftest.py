import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from catnet.skeleton import Skeleton

settings.register_profile(
    "catnet", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("catnet")

ACCEPTANCE_LINES = []


def random_skeleton(rng, dims, scale=1.0):
    return Skeleton([
        (scale * rng.standard_normal((dims[i + 1], dims[i])), scale * rng.standard_normal(dims[i + 1]))
        for i in range(len(dims) - 1)
    ])


@st.composite
def skeletons(draw, max_depth=4, max_width=5, in_dim=None, out_dim=None):
    depth = draw(st.integers(1, max_depth))
    dims = [draw(st.integers(1, max_width)) for _ in range(depth + 1)]
    if in_dim is not None:
        dims[0] = in_dim
    if out_dim is not None:
        dims[-1] = out_dim
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_skeleton(np.random.default_rng(seed), dims)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
