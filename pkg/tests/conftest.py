import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tornmend.harness import TearSpec, pair_from_spec
from tornmend.repair import default_atlas

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def atlas():
    return default_atlas()


@pytest.fixture(scope="session")
def straight_pair():
    """A clean straight tear, no gap, no flip, no displacement."""
    return pair_from_spec(TearSpec(tear_kind="straight", amplitude=8.0, seed=11))


@pytest.fixture(scope="session")
def displaced_pair():
    """The (37, -12) displacement used by the alignment examples."""
    return pair_from_spec(TearSpec(tear_kind="straight", amplitude=10.0, gap_width=2.0,
                                   displace_b=(37, -12), seed=12))


@pytest.fixture(scope="session")
def flipped_pair():
    return pair_from_spec(TearSpec(tear_kind="polyline", teeth=3, amplitude=12.0, gap_width=2.0,
                                   noise_sigma=4.0, flip_b=True, displace_b=(-20, 15), seed=13))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the run summary."""
    def record(number, ok, detail):
        _CRITERIA[number] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
