"""Quick property checks run by ``thurston self-test``.

Each check returns ``(name, passed, measured, tolerance)``.  Sizes are small
so the whole run takes a few seconds; the test suite covers the same
properties at full scale.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .flags import word_attracting_flag, word_cocycle
from .flows import SuspensionFlow, bowen_margulis, dth_flow, renormalized_intersection
from .optimize import max_cycle_ratio
from .repmetrics import dth_reps
from .reps import (
    functional_preset,
    random_conjugate,
    schottky_sl2,
    sym_power,
    word_jordan,
)
from .sft import full_shift, golden_mean_shift, random_graph
from .thermo import livsic_reduce, pressure, pressure_derivative, topological_entropy
from .words import Word, enumerate_classes


def _random_potential(g, rng):
    return g.potential(rng.normal(size=g.n_edges))


def _random_roof(g, rng):
    return g.roof(rng.uniform(0.5, 2.0, size=g.n_edges))


def check_pressure(rng):
    g2 = full_shift(2)
    err = abs(pressure(g2, g2.constant(0.0)) - math.log(2))
    err = max(err, abs(topological_entropy(golden_mean_shift()) - math.log((1 + math.sqrt(5)) / 2)))
    for _ in range(10):
        g = random_graph(int(rng.integers(3, 7)), rng)
        f = _random_potential(g, rng)
        c = float(rng.normal())
        err = max(err, abs(pressure(g, f + c) - pressure(g, f) - c))
    return "pressure exactness", err <= 1e-10, err, 1e-10


def check_derivative(rng):
    err = 0.0
    for _ in range(10):
        g = random_graph(5, rng)
        f, d = _random_potential(g, rng), _random_potential(g, rng)
        h = 1e-4
        fd = (pressure(g, f + h * d) - pressure(g, f - h * d)) / (2 * h)
        err = max(err, abs(pressure_derivative(g, f, d) - fd))
    return "pressure derivative", err <= 1e-6, err, 1e-6


def check_livsic(rng):
    ok = True
    for _ in range(10):
        g = random_graph(5, rng)
        cob = g.coboundary(rng.normal(size=g.n_states)) + float(rng.normal())
        ok &= livsic_reduce(g, cob).is_coboundary
        bad = cob + g.potential(np.eye(g.n_edges)[int(rng.integers(g.n_edges))])
        res = livsic_reduce(g, bad)
        ok &= (not res.is_coboundary) and abs(res.witness.mean(bad) - res.c) > 1e-10
    return "livsic dichotomy", bool(ok), float(not ok), 0.0


def check_cycle_ratio(rng):
    err = 0.0
    for _ in range(20):
        g = random_graph(int(rng.integers(2, 7)), rng)
        w, t = _random_potential(g, rng), _random_roof(g, rng)
        vals = [max_cycle_ratio(g, w, t, m).value for m in ("howard", "lawler", "brute")]
        err = max(err, max(vals) - min(vals))
    return "max cycle ratio", err <= 1e-9, err, 1e-9


def check_rigidity(rng):
    worst = math.inf
    for _ in range(10):
        g = random_graph(5, rng)
        f1, f2 = SuspensionFlow(g, _random_roof(g, rng)), SuspensionFlow(g, _random_roof(g, rng))
        worst = min(worst, renormalized_intersection(bowen_margulis(f1), f1, f2))
    return "renormalized intersection >= 1", worst >= 1 - 1e-9, worst, 1e-9


def check_abramov(rng):
    err = 0.0
    for _ in range(5):
        g = random_graph(5, rng)
        f = SuspensionFlow(g, _random_roof(g, rng))
        for c in (0.5, 2.0, 7.3):
            err = max(err, abs(f.scaled(c).entropy - f.entropy / c))
    return "entropy scaling", err <= 1e-9, err, 1e-9


def check_flow_distance(rng):
    g = full_shift(3)
    r = _random_roof(g, rng)
    f1, f2 = SuspensionFlow(g, r), SuspensionFlow(g, r * 3.0)
    val = abs(dth_flow(f1, f2).value)
    return "distance to rescaled roof", val <= 1e-9, val, 1e-9


def check_reps(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rho = schottky_sl2(3.0)
    classes = list(enumerate_classes(2, 6))
    err = 0.0
    for k in rng.choice(len(classes), 20, replace=False):
        w = classes[k].word()
        lam = word_jordan(rho, w).values
        for d in (3, 5):
            pattern = lam[0] * np.arange(d - 1, -d, -2)
            err = max(err, float(np.max(np.abs(word_jordan(sym_power(rho, d), w).values - pattern))))
        rho4 = sym_power(rho, 4)
        F = word_attracting_flag(rho4, w)
        err = max(err, float(np.max(np.abs(word_cocycle(rho4, w, F) - word_jordan(rho4, w).values))))
        err = max(err, float(np.max(np.abs(word_jordan(rho, w ** 3).values - 3 * lam))))
    return "representation identities", err <= 1e-8, err, 1e-8


def check_rep_distance(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rho = sym_power(schottky_sl2(3.0), 3)
        other = random_conjugate(rho, rng)
        f = functional_preset("hilbert", 3)
        val = max(abs(dth_reps(rho, rho, f, 8).value), abs(dth_reps(rho, other, f, 8).value))
    return "representation distance sanity", val <= 1e-10, val, 1e-10


CHECKS = (
    check_pressure,
    check_derivative,
    check_livsic,
    check_cycle_ratio,
    check_rigidity,
    check_abramov,
    check_flow_distance,
    check_reps,
    check_rep_distance,
)


def run(seed: int = 0) -> list[tuple]:
    rng = np.random.default_rng(seed)
    return [check(rng) for check in CHECKS]


if __name__ == "__main__":
    for name, ok, val, tol in run():
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {val:.3e} (tol {tol:g})")
