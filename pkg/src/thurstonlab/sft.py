"""Subshifts of finite type presented by directed graphs.

A subshift is identified with its defining graph: symbols are edges and
admissible bi-infinite sequences are bi-infinite walks.  Potentials are
edge-local (they depend on two consecutive states), which is enough to make
pressure, equilibrium states and cohomology exactly computable by finite
linear algebra.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import (
    BudgetExceeded,
    CycleNotInGraph,
    DanglingState,
    DuplicateEdge,
    GraphMismatch,
    NotIrreducible,
)

MEASURE_TOL = 1e-12
DEFAULT_CYCLE_CAP = 1_000_000


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SubshiftGraph:
    """Irreducible directed graph; use :func:`build_subshift` to construct."""

    states: tuple
    edges: tuple  # (source index, target index) pairs
    state_index: dict = field(repr=False)
    edge_index: dict = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def sources(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=int)

    @property
    def targets(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=int)

    def edges_by_name(self) -> list[tuple]:
        return [(self.states[i], self.states[j]) for i, j in self.edges]

    def out_edges(self, state: int) -> list[int]:
        return [k for k, (i, _) in enumerate(self.edges) if i == state]

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_states, self.n_states))
        for i, j in self.edges:
            A[i, j] = 1.0
        return A

    def weighted_matrix(self, values: np.ndarray) -> np.ndarray:
        """Matrix with ``exp(values[e])`` at each edge ``e`` and zeros elsewhere."""
        M = np.zeros((self.n_states, self.n_states))
        src, tgt = self.sources, self.targets
        M[src, tgt] = np.exp(values)
        return M

    def potential(self, values) -> "EdgePotential":
        return EdgePotential(self, values)

    def roof(self, values) -> "RoofFunction":
        return RoofFunction(self, values)

    def constant(self, c: float) -> "EdgePotential":
        return EdgePotential(self, np.full(self.n_edges, float(c)))

    def coboundary(self, u) -> "EdgePotential":
        """The potential ``u(target) - u(source)`` for a state function ``u``."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_states,):
            raise GraphMismatch("state function has wrong length")
        return EdgePotential(self, u[self.targets] - u[self.sources])

    def edge_between(self, source, target) -> int:
        key = (self.state_index[source], self.state_index[target])
        try:
            return self.edge_index[key]
        except KeyError:
            raise CycleNotInGraph(f"no edge {source!r} -> {target!r}") from None


def _reachable(n: int, adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def build_subshift(states: Sequence[Hashable], edges: Iterable[tuple]) -> SubshiftGraph:
    """Validate ``(states, edges)`` and return a strongly connected graph.

    ``edges`` are pairs of state labels.  Raises :class:`DuplicateEdge`,
    :class:`DanglingState` (an isolated or unknown state) or
    :class:`NotIrreducible` naming a state pair without a connecting path.
    """
    states = tuple(states)
    state_index = {s: k for k, s in enumerate(states)}
    if len(state_index) != len(states):
        raise DuplicateEdge("duplicate state label")
    edge_list = []
    edge_index = {}
    for src, tgt in edges:
        if src not in state_index or tgt not in state_index:
            raise DanglingState(f"edge ({src!r}, {tgt!r}) uses an unknown state")
        key = (state_index[src], state_index[tgt])
        if key in edge_index:
            raise DuplicateEdge(f"duplicate edge {src!r} -> {tgt!r}")
        edge_index[key] = len(edge_list)
        edge_list.append(key)
    if not edge_list:
        raise DanglingState("edge list is empty")

    n = len(states)
    out_adj: list[list[int]] = [[] for _ in range(n)]
    in_adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edge_list:
        out_adj[i].append(j)
        in_adj[j].append(i)
    for k in range(n):
        if not out_adj[k] and not in_adj[k]:
            raise DanglingState(f"state {states[k]!r} has no edges")

    fwd = _reachable(n, out_adj, 0)
    if len(fwd) < n:
        missing = min(set(range(n)) - fwd)
        raise NotIrreducible(f"no path from {states[0]!r} to {states[missing]!r}")
    bwd = _reachable(n, in_adj, 0)
    if len(bwd) < n:
        missing = min(set(range(n)) - bwd)
        raise NotIrreducible(f"no path from {states[missing]!r} to {states[0]!r}")

    return SubshiftGraph(states, tuple(edge_list), state_index, edge_index)


def full_shift(k: int) -> SubshiftGraph:
    states = list(range(1, k + 1))
    return build_subshift(states, [(a, b) for a in states for b in states])


def golden_mean_shift() -> SubshiftGraph:
    return build_subshift([1, 2], [(1, 1), (1, 2), (2, 1)])


def cycle_graph(n: int) -> SubshiftGraph:
    states = list(range(1, n + 1))
    return build_subshift(states, [(s, states[k % n]) for k, s in enumerate(states, start=1)])


def random_graph(n: int, rng: np.random.Generator, density: float = 0.4) -> SubshiftGraph:
    """Random strongly connected graph: a Hamiltonian cycle plus random chords."""
    perm = rng.permutation(n)
    pairs = {(int(perm[k]), int(perm[(k + 1) % n])) for k in range(n)}
    for i in range(n):
        for j in range(n):
            if rng.random() < density:
                pairs.add((i, j))
    return build_subshift(list(range(n)), sorted(pairs))


class EdgePotential:
    """A real weight on each edge of ``graph``."""

    def __init__(self, graph: SubshiftGraph, values):
        values = _frozen(values)
        if values.shape != (graph.n_edges,):
            raise GraphMismatch(
                f"potential has {values.size} values, graph has {graph.n_edges} edges"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        self.graph = graph
        self.values = values

    def _check(self, other: "EdgePotential") -> None:
        if other.graph is not self.graph:
            raise GraphMismatch("potentials live on different graphs")

    def _coerce(self, other):
        if isinstance(other, EdgePotential):
            self._check(other)
            return other.values
        return float(other)

    def __add__(self, other):
        return EdgePotential(self.graph, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return EdgePotential(self.graph, self.values - self._coerce(other))

    def __rsub__(self, other):
        return EdgePotential(self.graph, self._coerce(other) - self.values)

    def __mul__(self, c):
        return EdgePotential(self.graph, float(c) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return EdgePotential(self.graph, self.values / float(c))

    def __neg__(self):
        return EdgePotential(self.graph, -self.values)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.values.tolist()})"


class RoofFunction(EdgePotential):
    """A strictly positive potential: time spent traversing each edge."""

    def __init__(self, graph: SubshiftGraph, values):
        super().__init__(graph, values)
        if not np.min(self.values) > 0:
            raise ValueError("roof function must be strictly positive")

    def __mul__(self, c):
        c = float(c)
        if c > 0:
            return RoofFunction(self.graph, c * self.values)
        return EdgePotential(self.graph, c * self.values)

    __rmul__ = __mul__


class Cycle:
    """A closed walk given by its edge indices.

    Cycles need not be simple; the same edge may appear several times.
    """

    def __init__(self, graph: SubshiftGraph, edges: Sequence[int]):
        edges = tuple(int(e) for e in edges)
        if not edges:
            raise CycleNotInGraph("cycle must be nonempty")
        for e in edges:
            if not 0 <= e < graph.n_edges:
                raise CycleNotInGraph(f"edge index {e} not in graph")
        for a, b in zip(edges, edges[1:] + edges[:1]):
            if graph.edges[a][1] != graph.edges[b][0]:
                raise CycleNotInGraph(f"edges {a} and {b} do not chain")
        self.graph = graph
        self.edges = edges

    @classmethod
    def from_states(cls, graph: SubshiftGraph, states: Sequence) -> "Cycle":
        """Cycle visiting ``states`` in order and returning to ``states[0]``."""
        states = list(states)
        pairs = zip(states, states[1:] + states[:1])
        return cls(graph, [graph.edge_between(a, b) for a, b in pairs])

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def length(self) -> int:
        return len(self.edges)

    def state_sequence(self) -> list:
        return [self.graph.states[self.graph.edges[e][0]] for e in self.edges]

    def total(self, f: EdgePotential) -> float:
        if f.graph is not self.graph:
            raise GraphMismatch("potential and cycle live on different graphs")
        return float(np.sum(f.values[list(self.edges)]))

    def mean(self, f: EdgePotential) -> float:
        return self.total(f) / len(self.edges)

    def canonical(self) -> "Cycle":
        return Cycle(self.graph, min_rotation(self.edges))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Cycle)
            and other.graph is self.graph
            and min_rotation(other.edges) == min_rotation(self.edges)
        )

    def __hash__(self) -> int:
        return hash(min_rotation(self.edges))

    def __repr__(self) -> str:
        return f"Cycle({'->'.join(map(str, self.state_sequence()))})"


def min_rotation(seq: Sequence) -> tuple:
    seq = tuple(seq)
    return min(seq[k:] + seq[:k] for k in range(len(seq)))


def enumerate_cycles(
    g: SubshiftGraph, max_edge_count: int, cap: int = DEFAULT_CYCLE_CAP
) -> list[Cycle]:
    """All closed walks of at most ``max_edge_count`` edges, one per rotation class.

    Each walk is represented by its lexicographically minimal rotation of edge
    indices.  Results are ordered by length, then lexicographically.
    """
    if max_edge_count < 1:
        raise ValueError("max_edge_count must be at least 1")
    src = [e[0] for e in g.edges]
    tgt = [e[1] for e in g.edges]
    out = [[] for _ in range(g.n_states)]
    for k, s in enumerate(src):
        out[s].append(k)

    found: list[tuple] = []
    path: list[int] = []

    # Depth-first search over prenecklaces: path[t] >= path[t - p] where p is the
    # period of the current Lyndon prefix (Fredricksen-Kessler-Maiorana).
    def extend(p: int) -> None:
        t = len(path)
        if tgt[path[-1]] == src[path[0]] and t % p == 0:
            found.append(tuple(path))
            if len(found) > cap:
                raise BudgetExceeded(
                    f"more than {cap} cycles up to length {max_edge_count}; lower the bound"
                )
        if t == max_edge_count:
            return
        floor = path[t - p]
        for e in out[tgt[path[-1]]]:
            if e < floor:
                continue
            path.append(e)
            extend(p if e == floor else t + 1)
            path.pop()

    for e0 in range(g.n_edges):
        path.append(e0)
        extend(1)
        path.pop()

    found.sort(key=lambda c: (len(c), c))
    return [Cycle(g, c) for c in found]


class MarkovMeasure:
    """Shift-invariant Markov measure on the edge shift of ``graph``."""

    def __init__(self, graph: SubshiftGraph, state_weights, edge_probs, tol: float = MEASURE_TOL):
        w = _frozen(state_weights)
        p = _frozen(edge_probs)
        if w.shape != (graph.n_states,) or p.shape != (graph.n_edges,):
            raise GraphMismatch("measure data does not match graph")
        if np.any(w < -tol) or np.any(p < -tol):
            raise ValueError("negative weights")
        if abs(w.sum() - 1.0) > tol:
            raise ValueError(f"state weights sum to {w.sum()!r}")
        src, tgt = graph.sources, graph.targets
        row = np.bincount(src, weights=p, minlength=graph.n_states)
        bad = (w > tol) & (np.abs(row - 1.0) > tol)
        if np.any(bad):
            raise ValueError("outgoing transition probabilities do not sum to 1")
        freq = w[src] * p
        inflow = np.bincount(tgt, weights=freq, minlength=graph.n_states)
        if np.max(np.abs(inflow - w)) > tol:
            raise ValueError("measure is not stationary")
        self.graph = graph
        self.state_weights = w
        self.edge_probs = p
        self.edge_frequencies = _frozen(freq)

    def entropy(self) -> float:
        """Kolmogorov-Sinai entropy ``-sum freq(e) log prob(e)``."""
        f, p = self.edge_frequencies, self.edge_probs
        mask = f > 0
        return float(-np.sum(f[mask] * np.log(p[mask])))

    def sample_path(self, n_steps: int, rng: np.random.Generator) -> np.ndarray:
        """Edge indices of a stationary trajectory of length ``n_steps``."""
        g = self.graph
        out = [g.out_edges(i) for i in range(g.n_states)]
        cum = [np.cumsum(self.edge_probs[o]) for o in out]
        state = int(rng.choice(g.n_states, p=self.state_weights / self.state_weights.sum()))
        u = rng.random(n_steps)
        path = np.empty(n_steps, dtype=int)
        tgt = g.targets
        for k in range(n_steps):
            idx = min(int(np.searchsorted(cum[state], u[k] * cum[state][-1], side="right")),
                      len(out[state]) - 1)
            e = out[state][idx]
            path[k] = e
            state = tgt[e]
        return path


def cycle_measure(g: SubshiftGraph, a: Cycle) -> MarkovMeasure:
    """Periodic measure equidistributed on the edges of ``a``."""
    if a.graph is not g:
        raise CycleNotInGraph("cycle belongs to a different graph")
    n = len(a)
    counts = np.bincount(np.array(a.edges), minlength=g.n_edges).astype(float)
    visits = np.bincount(g.sources, weights=counts, minlength=g.n_states)
    probs = np.zeros(g.n_edges)
    used = counts > 0
    probs[used] = counts[used] / visits[g.sources[used]]
    # unvisited states still need a valid transition row
    for i in np.flatnonzero(visits == 0):
        oe = g.out_edges(int(i))
        probs[oe] = 1.0 / len(oe)
    return MarkovMeasure(g, visits / n, probs)


def integrate(m: MarkovMeasure, f: EdgePotential) -> float:
    if m.graph is not f.graph:
        raise GraphMismatch("measure and potential live on different graphs")
    return float(np.dot(m.edge_frequencies, f.values))
