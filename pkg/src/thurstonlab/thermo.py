"""Pressure, equilibrium states and Livsic cohomology for edge potentials."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, GraphMismatch
from .sft import Cycle, EdgePotential, MarkovMeasure, SubshiftGraph, integrate

MAX_ITER = 100_000
EIG_TOL = 1e-13
LIVSIC_TOL = 1e-10
# power iteration is abandoned for the dense solver once it stalls this long
STALL_ITER = 2_000


@dataclass(frozen=True)
class PerronData:
    log_radius: float
    right: np.ndarray
    left: np.ndarray


def _power_iteration(M: np.ndarray, max_iter: int, tol: float):
    # a positive diagonal shift makes periodic (imprimitive) matrices converge;
    # the smallest row sum is a lower bound for the Perron root
    n = M.shape[0]
    alpha = float(M.sum(axis=1).min())
    S = M + alpha * np.eye(n)
    x = np.full(n, 1.0 / n)
    lam_old = np.inf
    for k in range(max_iter):
        y = S @ x
        lam = y.sum()
        y /= lam
        if abs(lam - lam_old) <= tol * lam and np.max(np.abs(y - x)) <= tol * 10:
            return lam - alpha, y, k
        x, lam_old = y, lam
    return None


def _dense_perron(M: np.ndarray):
    vals, vecs = np.linalg.eig(M)
    k = int(np.argmax(vals.real))
    v = np.real(vecs[:, k])
    v = v * np.sign(v.sum())
    if np.any(v < -1e-12 * np.abs(v).max()) or vals[k].real <= 0:
        raise ConvergenceFailure("dense eigensolver did not return a Perron vector")
    return float(vals[k].real), np.clip(v, 0.0, None) / v.sum()


def _polish(M: np.ndarray, lam: float, v: np.ndarray, steps: int = 2):
    """Newton steps on ``M v = lam v, sum(v) = 1`` (bordered system)."""
    n = M.shape[0]
    for _ in range(steps):
        r = M @ v - lam * v
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = M - lam * np.eye(n)
        J[:n, n] = -v
        J[n, :n] = 1.0
        try:
            delta = np.linalg.solve(J, np.concatenate([-r, [0.0]]))
        except np.linalg.LinAlgError:
            break
        v = v + delta[:n]
        lam = lam + delta[n]
    if np.any(v < 0):
        v = np.clip(v, 0.0, None)
    return lam, v / v.sum()


def perron(M: np.ndarray, max_iter: int = MAX_ITER, tol: float = EIG_TOL) -> PerronData:
    """Perron root and positive left/right eigenvectors of an irreducible matrix.

    Power iteration on a diagonally shifted matrix first; if it has not converged after
    ``STALL_ITER`` steps the dense eigensolver takes over.  Newton steps on the
    bordered eigen-system then polish the result to rounding level.
    """
    rights = []
    radius = None
    for A in (M, M.T):
        res = _power_iteration(A, min(max_iter, STALL_ITER), tol)
        if res is None:
            lam, vec = _dense_perron(A)
        else:
            lam, vec, _ = res
        lam, vec = _polish(A, lam, vec)
        rights.append(vec)
        radius = lam if radius is None else radius
    if not radius > 0:
        raise ConvergenceFailure("Perron root is not positive")
    return PerronData(float(np.log(radius)), rights[0], rights[1])


def _check(g: SubshiftGraph, f: EdgePotential) -> None:
    if f.graph is not g:
        raise GraphMismatch("potential lives on a different graph")


def _perron_of(g: SubshiftGraph, values: np.ndarray) -> PerronData:
    # factor out the largest weight so exp() cannot overflow
    shift = float(np.max(values))
    pd = perron(g.weighted_matrix(values - shift))
    return PerronData(pd.log_radius + shift, pd.right, pd.left)


def topological_entropy(g: SubshiftGraph) -> float:
    return pressure(g, g.constant(0.0))


def pressure(g: SubshiftGraph, f: EdgePotential) -> float:
    """Log spectral radius of the matrix with ``exp(f(e))`` on each edge."""
    _check(g, f)
    return _perron_of(g, f.values).log_radius


def equilibrium_measure(g: SubshiftGraph, f: EdgePotential) -> MarkovMeasure:
    _check(g, f)
    shift = float(np.max(f.values))
    vals = f.values - shift
    pd = _perron_of(g, f.values)
    rho = np.exp(pd.log_radius - shift)
    r, l = pd.right, pd.left
    src, tgt = g.sources, g.targets
    probs = np.exp(vals) * r[tgt] / (rho * r[src])
    # remove rounding so rows sum to one exactly
    rows = np.bincount(src, weights=probs, minlength=g.n_states)
    probs = probs / rows[src]
    w = l * r
    w = w / w.sum()
    # one sweep of w <- w P keeps stationarity at rounding level
    for _ in range(2):
        w = np.bincount(tgt, weights=w[src] * probs, minlength=g.n_states)
        w = w / w.sum()
    return MarkovMeasure(g, w, probs)


def pressure_derivative(g: SubshiftGraph, f: EdgePotential, direction: EdgePotential) -> float:
    """``d/ds P(f + s*direction)`` at ``s = 0``, the integral against the equilibrium state."""
    return integrate(equilibrium_measure(g, f), direction)


def pressure_second_derivative(
    g: SubshiftGraph, f: EdgePotential, direction: EdgePotential
) -> float:
    """``d^2/ds^2 P(f + s*direction)`` at ``s = 0``.

    Evaluated as the asymptotic variance of ``direction`` under the equilibrium
    state of ``f``, using the fundamental matrix of the state chain.
    """
    m = equilibrium_measure(g, f)
    n = g.n_states
    src, tgt = g.sources, g.targets
    gbar = direction.values - integrate(m, direction)
    P = np.zeros((n, n))
    np.add.at(P, (src, tgt), m.edge_probs)
    pi = m.state_weights
    b = np.bincount(src, weights=m.edge_probs * gbar, minlength=n)
    Z = np.linalg.inv(np.eye(n) - P + np.outer(np.ones(n), pi))
    zb = Z @ b
    freq = m.edge_frequencies
    return float(np.sum(freq * gbar**2) + 2.0 * np.sum(freq * gbar * zb[tgt]))


@dataclass(frozen=True)
class LivsicResult:
    u: np.ndarray
    c: float
    is_coboundary: bool
    witness: Cycle | None
    max_residual: float


def _bfs_tree(g: SubshiftGraph, root: int, reverse: bool) -> list[int]:
    """Parent edge of every state in a BFS tree rooted at ``root``.

    With ``reverse`` the tree is built on incoming edges, so following parent
    edges leads from a state to the root.
    """
    parent = [-1] * g.n_states
    seen = [False] * g.n_states
    seen[root] = True
    queue = deque([root])
    incidence = [[] for _ in range(g.n_states)]
    for k, (i, j) in enumerate(g.edges):
        incidence[j if reverse else i].append(k)
    while queue:
        v = queue.popleft()
        for k in incidence[v]:
            w = g.edges[k][0] if reverse else g.edges[k][1]
            if not seen[w]:
                seen[w] = True
                parent[w] = k
                queue.append(w)
    return parent


def _path_to(g: SubshiftGraph, parent: list[int], v: int) -> list[int]:
    """Edges of the out-tree path root -> v."""
    path = []
    while parent[v] != -1:
        k = parent[v]
        path.append(k)
        v = g.edges[k][0]
    return path[::-1]


def _path_from(g: SubshiftGraph, parent: list[int], v: int) -> list[int]:
    """Edges of the in-tree path v -> root."""
    path = []
    while parent[v] != -1:
        k = parent[v]
        path.append(k)
        v = g.edges[k][1]
    return path


def livsic_reduce(g: SubshiftGraph, f: EdgePotential, tol: float = LIVSIC_TOL) -> LivsicResult:
    """Decide whether ``f`` is cohomologous to a constant.

    Writes ``f(i->j) = c + u(j) - u(i) + residual`` with ``u`` fixed along a BFS
    out-tree from state 0.  When some residual exceeds ``tol`` a closed walk
    whose mean differs from ``c`` is returned as witness.
    """
    _check(g, f)
    root = 0
    out_parent = _bfs_tree(g, root, reverse=False)
    in_parent = _bfs_tree(g, root, reverse=True)
    vals = f.values

    # reference cycle: first edge entering the root closed up through the out-tree
    e0 = next(k for k, (_, j) in enumerate(g.edges) if j == root)
    base = _path_to(g, out_parent, g.edges[e0][0]) + [e0]
    c = float(np.sum(vals[base])) / len(base)

    shifted = vals - c
    u = np.zeros(g.n_states)
    order = deque([root])
    children = [[] for _ in range(g.n_states)]
    for v, k in enumerate(out_parent):
        if k != -1:
            children[g.edges[k][0]].append(v)
    while order:
        v = order.popleft()
        for w in children[v]:
            u[w] = u[v] + shifted[out_parent[w]]
            order.append(w)

    src, tgt = g.sources, g.targets
    residual = shifted - (u[tgt] - u[src])
    worst = float(np.max(np.abs(residual)))
    if worst <= tol:
        return LivsicResult(u - u.min(), c, True, None, worst)

    # residual(e) = S(C_e) - S(D_j) with C_e = root~>i, e, j~>root and
    # D_j = root~>j~>root, so one of the two walks has a nonzero excess sum
    k = int(np.argmax(np.abs(residual)))
    i, j = g.edges[k]
    walk_e = _path_to(g, out_parent, i) + [k] + _path_from(g, in_parent, j)
    walk_j = _path_to(g, out_parent, j) + _path_from(g, in_parent, j)
    best = None
    for walk in (walk_e, walk_j):
        if not walk:
            continue
        excess = abs(float(np.sum(shifted[walk]))) / len(walk)
        if best is None or excess > best[0]:
            best = (excess, walk)
    witness = Cycle(g, best[1])
    return LivsicResult(u - u.min(), c, False, witness, worst)
