import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hyperball.geometry import BergmanBall, Disc, PoincareBall

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

MODELS = [Disc(), PoincareBall(2), PoincareBall(3), PoincareBall(5), BergmanBall(1),
          BergmanBall(2), BergmanBall(3)]


def model_id(m):
    return str(m)


def random_points(model, n, rng, rmax=0.95):
    """``n`` points with radii uniform in ``[0, rmax)`` and uniform directions."""
    u = rng.standard_normal((n, model.real_dim))
    u /= np.linalg.norm(u, axis=1)[:, None]
    r = rmax * rng.random(n)
    return model.from_real(r[:, None] * u)


def random_point(model, rng, rmax=0.95):
    return random_points(model, 1, rng, rmax)[0]


def random_isometry(model, rng, rmax=0.9):
    return model.isometry(model.random_rotation(rng), random_point(model, rng, rmax))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=MODELS, ids=model_id)
def model(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
