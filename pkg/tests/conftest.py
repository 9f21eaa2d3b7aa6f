import numpy as np
import pytest

from mixsyn import MixedProblem, generate_instance, load_instance


@pytest.fixture(scope="session")
def instance0():
    return load_instance("instance0")


@pytest.fixture(scope="session")
def instance0_1ch():
    return load_instance("instance0", single_channel=True)


@pytest.fixture(scope="session")
def example1():
    return load_instance("example1")


@pytest.fixture(scope="session")
def example2():
    return load_instance("example2")


@pytest.fixture(scope="session")
def example3():
    # two-channel scalar instance, beta = 1
    return load_instance("example3")


@pytest.fixture(scope="session")
def example3_beta2(example3):
    return example3.with_beta(2.0)


@pytest.fixture(scope="session")
def example3_1ch():
    return load_instance("example3_1ch")


@pytest.fixture(scope="session")
def small_instances():
    """A handful of small random instances, mixed channels."""
    specs = [(2, 1, 11, False), (3, 2, 12, True), (4, 2, 13, False), (5, 3, 14, True)]
    return [generate_instance(n, m, seed, two_channel=two) for n, m, seed, two in specs]


def scalar_problem(beta, q2=0.0, r2=1.0, qinf=1.0, rinf=1.0):
    return MixedProblem(
        A=[[-1.0]], B=[[1.0]], Bw=[[1.0]],
        Q2=[[q2]], R2=[[r2]], Qinf=[[qinf]], Rinf=[[rinf]], beta=beta,
    )
