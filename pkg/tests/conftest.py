import numpy as np
import pytest
from hypothesis import settings

from toricnk import exterior as ex
from toricnk.golden import sample_ball
from toricnk.jets import s3s3_phi

settings.register_profile("toricnk", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("toricnk")


def random_form(rng, degree, shape=()):
    return ex.Form(degree, rng.normal(size=tuple(shape) + (ex.SIZES[degree],)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def s3s3():
    return s3s3_phi()


@pytest.fixture(scope="session")
def ball_points():
    return sample_ball(200, 0.25, seed=7)
