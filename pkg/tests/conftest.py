import pytest

from knowtransfer.baseline import solve_optimal
from knowtransfer.payoff_env import DECREASING, Affine, make_polynomial_env
from knowtransfer.retirement import RetirementEnv, solve_retirement

GOLDEN = (5 ** 0.5 - 1) / 2


def bench_env(delta=0.8):
    """pi = s, w = 0.6 - 0.5 s^2, v = s."""
    return make_polynomial_env([0, 1], [0.6, 0, -0.5], [0, 1], delta)


def linear_env(delta):
    """pi = s, w = 0.6 - 0.3 s: delta*pi + w has slope delta - 0.3."""
    return make_polynomial_env([0, 1], [0.6, -0.3], [0, 1], delta)


def cost(c=0.5):
    return Affine(c, -c, DECREASING)


@pytest.fixture(scope="session")
def env():
    return bench_env()


@pytest.fixture(scope="session")
def opt(env):
    return solve_optimal(env)


@pytest.fixture(scope="session")
def envR(env):
    return RetirementEnv(env, 2, cost())


@pytest.fixture(scope="session")
def rc(envR):
    return solve_retirement(envR)
