import networkx as nx
import numpy as np
import pytest

from thurstonlab.optimize import max_cycle_ratio, simple_cycles
from thurstonlab.sft import build_subshift, cycle_graph, full_shift, random_graph

from .conftest import random_graphs, random_potential, random_roof


def _nx_oracle(g, w, t):
    D = nx.DiGraph()
    for e, (i, j) in enumerate(g.edges):
        D.add_edge(i, j, e=e)
    best = -np.inf
    for cyc in nx.simple_cycles(D):
        idx = [D[a][b]["e"] for a, b in zip(cyc, cyc[1:] + cyc[:1])]
        best = max(best, w[idx].sum() / t[idx].sum())
    return best


def test_equal_numerator_denominator(rng):
    g = random_graph(5, rng)
    t = random_roof(g, rng)
    assert max_cycle_ratio(g, t, t).value == pytest.approx(1.0, abs=1e-15)


def test_single_cycle_graph(rng):
    g = cycle_graph(6)
    w, t = random_potential(g, rng), random_roof(g, rng)
    res = max_cycle_ratio(g, w, t)
    assert res.value == pytest.approx(w.values.sum() / t.values.sum(), abs=1e-14)
    assert len(res.cycle) == 6


@pytest.mark.parametrize("method", ["howard", "lawler", "brute"])
def test_matches_networkx_enumeration(rng, method):
    for g in random_graphs(rng, 25, 3, 8):
        w, t = random_potential(g, rng), random_roof(g, rng)
        res = max_cycle_ratio(g, w, t, method=method)
        assert res.value == pytest.approx(_nx_oracle(g, w.values, t.values), abs=1e-9)
        # the witness attains the reported value
        assert res.cycle.total(w) / res.cycle.total(t) == pytest.approx(res.value, abs=1e-12)


def test_random_eight_state(rng):
    for _ in range(10):
        g = random_graph(8, rng, density=0.3)
        w, t = random_potential(g, rng), random_roof(g, rng)
        assert max_cycle_ratio(g, w, t).value == pytest.approx(_nx_oracle(g, w.values, t.values), abs=1e-9)


def test_simple_cycle_count_matches_networkx(rng):
    for g in random_graphs(rng, 10, 2, 7):
        D = nx.DiGraph(list(g.edges))
        assert len(simple_cycles(g)) == sum(1 for _ in nx.simple_cycles(D))


def test_rejects_bad_denominator():
    g = full_shift(2)
    with pytest.raises(ValueError):
        max_cycle_ratio(g, g.constant(1.0), g.potential([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        max_cycle_ratio(g, g.constant(1.0), g.constant(1.0), method="simplex")


def test_ties_return_shortest_canonical_cycle():
    g = build_subshift([1, 2], [(1, 1), (1, 2), (2, 1), (2, 2)])
    res = max_cycle_ratio(g, g.constant(1.0), g.constant(1.0))
    assert res.value == 1.0
    assert len(res.cycle) >= 1
