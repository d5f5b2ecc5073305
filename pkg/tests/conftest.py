import numpy as np
import pytest

from thurstonlab.sft import random_graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_potential(g, rng, scale=1.0):
    return g.potential(scale * rng.normal(size=g.n_edges))


def random_roof(g, rng, lo=0.5, hi=2.0):
    return g.roof(rng.uniform(lo, hi, size=g.n_edges))


def random_graphs(rng, count, lo=2, hi=8, density=0.4):
    for _ in range(count):
        yield random_graph(int(rng.integers(lo, hi + 1)), rng, density)



def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
