import numpy as np
import pytest

from riesz_adi.services.problems.catalog import example1, example2, zero_problem


@pytest.fixture
def problem1():
    return example1()


@pytest.fixture
def problem2():
    return example2()


@pytest.fixture
def small_grid(problem1):
    # Unequal cell counts so x/y mix-ups change shapes.
    return problem1.grid(m1=7, m2=5)


@pytest.fixture
def zero():
    return zero_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)

