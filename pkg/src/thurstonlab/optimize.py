"""Maximum cycle ratio on strongly connected graphs.

``max over cycles C of sum(num on C) / sum(den on C)`` with ``den > 0``.
This is the finite-graph form of the ergodic optimization problem
``sup over invariant m of (integral num dm) / (integral den dm)``: on a
finite graph the supremum is attained at a periodic measure.

Two independent solvers are provided: Howard policy iteration (primary) and
Lawler's parametric search with Bellman-Ford positive-cycle detection.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, GraphMismatch
from .sft import Cycle, EdgePotential, SubshiftGraph

HOWARD_MAX_ITER = 10_000


@dataclass(frozen=True)
class CycleRatio:
    value: float
    cycle: Cycle
    method: str


def _ratio(edges, w, t) -> float:
    idx = list(edges)
    return float(np.sum(w[idx]) / np.sum(t[idx]))


def _policy_cycles(g: SubshiftGraph, policy: list[int]) -> list[list[int]]:
    """Cycles (as edge lists) of the functional graph ``v -> target(policy[v])``."""
    color = [0] * g.n_states  # 0 new, 1 on stack, 2 done
    cycles = []
    for start in range(g.n_states):
        if color[start]:
            continue
        trail = []
        v = start
        while color[v] == 0:
            color[v] = 1
            trail.append(v)
            v = g.edges[policy[v]][1]
        if color[v] == 1:
            k = trail.index(v)
            cycles.append([policy[u] for u in trail[k:]])
        for u in trail:
            color[u] = 2
    return cycles


def howard(g: SubshiftGraph, w: np.ndarray, t: np.ndarray, max_iter: int = HOWARD_MAX_ITER):
    n = g.n_states
    src, tgt = g.sources, g.targets
    out = [g.out_edges(v) for v in range(n)]
    scale = 1.0 + float(np.max(np.abs(w / t)))
    eps = 1e-12 * scale

    policy = [max(out[v], key=lambda e: (w[e] / t[e], -e)) for v in range(n)]
    for _ in range(max_iter):
        chi = np.full(n, np.nan)
        x = np.zeros(n)
        rev = [[] for _ in range(n)]
        for v in range(n):
            rev[tgt[policy[v]]].append(v)
        for cyc in _policy_cycles(g, policy):
            r = _ratio(cyc, w, t)
            handle = min(src[e] for e in cyc)
            chi[handle] = r
            x[handle] = 0.0
            queue = deque([handle])
            while queue:
                v = queue.popleft()
                for u in rev[v]:
                    if u == handle:
                        continue
                    e = policy[u]
                    chi[u] = r
                    x[u] = w[e] - r * t[e] + x[v]
                    queue.append(u)

        changed = False
        for v in range(n):
            best = max(out[v], key=lambda e: (chi[tgt[e]], -e))
            if chi[tgt[best]] > chi[v] + eps:
                policy[v] = best
                changed = True
        if not changed:
            for v in range(n):
                cands = [e for e in out[v] if abs(chi[tgt[e]] - chi[v]) <= eps]
                vals = {e: w[e] - chi[v] * t[e] + x[tgt[e]] for e in cands}
                best = max(cands, key=lambda e: (vals[e], -e))
                if vals[best] > x[v] + eps:
                    policy[v] = best
                    changed = True
        if not changed:
            best_cycle = max(_policy_cycles(g, policy), key=lambda c: _ratio(c, w, t))
            return Cycle(g, best_cycle)
    raise ConvergenceFailure("Howard policy iteration exceeded its iteration limit")


def _pred_cycle(g: SubshiftGraph, pred: list[int]):
    """A cycle of the predecessor graph, if there is one."""
    state = [0] * g.n_states
    for start in range(g.n_states):
        trail = []
        v = start
        while v != -1 and state[v] == 0:
            state[v] = 1
            trail.append(v)
            v = g.edges[pred[v]][0] if pred[v] != -1 else -1
        if v != -1 and state[v] == 1:
            k = trail.index(v)
            # trail runs backwards along predecessor edges
            return [pred[u] for u in reversed(trail[k:])]
        for u in trail:
            state[u] = 2
    return None


def _positive_cycle(g: SubshiftGraph, c: np.ndarray, eps: float):
    """A cycle with positive total ``c`` if one exists (Bellman-Ford, longest paths)."""
    n = g.n_states
    dist = [0.0] * n
    pred = [-1] * n
    for rnd in range(3 * n + 3):
        changed = False
        for k, (i, j) in enumerate(g.edges):
            cand = dist[i] + c[k]
            if cand > dist[j] + eps:
                dist[j] = cand
                pred[j] = k
                changed = True
        if not changed:
            return None
        if rnd >= n:
            cyc = _pred_cycle(g, pred)
            if cyc is not None and float(np.sum(c[cyc])) > 0:
                return cyc
    return None


def lawler(g: SubshiftGraph, w: np.ndarray, t: np.ndarray, max_iter: int = 200):
    ratios = w / t
    lo, hi = float(ratios.min()), float(ratios.max())
    scale = 1.0 + max(abs(lo), abs(hi))
    eps = 1e-14 * scale * (1.0 + float(np.max(t)))
    best = _positive_cycle(g, w - (lo - 1.0) * t, eps)
    best_r = _ratio(best, w, t)
    lo = max(lo, best_r)
    for _ in range(max_iter):
        if hi - lo <= 1e-13 * scale:
            break
        mid = 0.5 * (lo + hi)
        cyc = _positive_cycle(g, w - mid * t, eps)
        if cyc is None:
            hi = mid
        else:
            r = _ratio(cyc, w, t)
            if r > best_r:
                best, best_r = cyc, r
            lo = max(mid, r)
    # Dinkelbach polishing: each positive cycle strictly improves the ratio
    for _ in range(max_iter):
        cyc = _positive_cycle(g, w - best_r * t, eps)
        if cyc is None:
            break
        r = _ratio(cyc, w, t)
        if r <= best_r:
            break
        best, best_r = cyc, r
    return Cycle(g, best)


def max_cycle_ratio(
    g: SubshiftGraph,
    numerator: EdgePotential,
    denominator: EdgePotential,
    method: str = "howard",
) -> CycleRatio:
    """Maximum of ``sum(numerator)/sum(denominator)`` over cycles, with a witness.

    ``method`` is ``"howard"`` (falls back to Lawler if policy iteration does
    not converge), ``"lawler"`` or ``"brute"`` (simple cycles; small graphs).
    """
    if numerator.graph is not g or denominator.graph is not g:
        raise GraphMismatch("potentials live on a different graph")
    w, t = numerator.values, denominator.values
    if not np.min(t) > 0:
        raise ValueError("denominator must be strictly positive")
    if method == "howard":
        try:
            cyc = howard(g, w, t)
        except ConvergenceFailure:
            cyc, method = lawler(g, w, t), "lawler"
    elif method == "lawler":
        cyc = lawler(g, w, t)
    elif method == "brute":
        cyc = max(simple_cycles(g), key=lambda c: _ratio(c.edges, w, t))
    else:
        raise ValueError(f"unknown method {method!r}")
    cyc = cyc.canonical()
    return CycleRatio(_ratio(cyc.edges, w, t), cyc, method)


def simple_cycles(g: SubshiftGraph) -> list[Cycle]:
    """All simple cycles (no repeated state), by depth-first search."""
    out = [g.out_edges(v) for v in range(g.n_states)]
    found = []
    for root in range(g.n_states):
        # cycles whose smallest state is root
        stack = [(root, [], {root})]
        while stack:
            v, path, seen = stack.pop()
            for e in out[v]:
                j = g.edges[e][1]
                if j == root:
                    found.append(Cycle(g, path + [e]))
                elif j > root and j not in seen:
                    stack.append((j, path + [e], seen | {j}))
    return found
