"""Full flags in R^d, attracting flags and the Busemann-Iwasawa cocycle.

A flag is stored as an orthonormal frame ``V``; subspace ``i`` is the span of
the first ``i`` columns.  The cocycle uses Euclidean norms on all exterior
powers, for which the partial sums of ``sigma(g, F)`` are the logs of the
diagonal of ``R`` in ``g V = Q R``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .errors import EigenFailure, NonLoxodromic
from .reps import GAP_TOL, MatrixRep, ScaledMatrix, evaluate_word, word_jordan
from .words import CyclicWord, Word

FRAME_TOL = 1e-12


def _qr_positive(A: np.ndarray):
    Q, R = np.linalg.qr(A)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s, R * s[:, None]


@dataclass(frozen=True)
class Flag:
    frame: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.frame, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError("a full flag needs a square frame")
        if np.max(np.abs(V.T @ V - np.eye(V.shape[0]))) > FRAME_TOL * V.shape[0]:
            raise ValueError("flag frame must be orthonormal")
        object.__setattr__(self, "frame", V)

    @classmethod
    def from_basis(cls, B) -> "Flag":
        """Flag spanned by the leading columns of an arbitrary basis."""
        Q, _ = _qr_positive(np.asarray(B, dtype=float))
        return cls(Q)

    @classmethod
    def standard(cls, d: int) -> "Flag":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def subspace(self, i: int) -> np.ndarray:
        return self.frame[:, :i]

    def reversed(self) -> "Flag":
        """Flag built from the columns in reverse order (the dual-position flag)."""
        return Flag(self.frame[:, ::-1].copy())

    def act(self, g) -> "Flag":
        """Image ``g . F``."""
        A = g.matrix if isinstance(g, ScaledMatrix) else np.asarray(g, dtype=float)
        Q, _ = _qr_positive(A @ self.frame)
        return Flag(Q)


def flag_distance(F1: Flag, F2: Flag) -> float:
    """Largest principal angle between corresponding subspaces of the two flags."""
    if F1.dim != F2.dim:
        raise ValueError("flags of different dimension")
    worst = 0.0
    for i in range(1, F1.dim):
        worst = max(worst, float(np.max(subspace_angles(F1.subspace(i), F2.subspace(i)))))
    return worst


def _sorted_eigenbasis(A: np.ndarray, descending: bool) -> np.ndarray:
    vals, vecs = np.linalg.eig(A)
    mod = np.abs(vals)
    order = np.argsort(-mod if descending else mod, kind="stable")
    mod = mod[order]
    if np.any(mod == 0) or np.any(np.abs(np.diff(np.log(mod))) <= GAP_TOL):
        raise NonLoxodromic("eigenvalue moduli are not separated")
    vecs = vecs[:, order]
    if np.max(np.abs(vecs.imag)) > 1e-8 * np.max(np.abs(vecs)):
        raise NonLoxodromic("complex eigenvalues: no real attracting flag")
    return vecs.real


def attracting_flag(m) -> Flag:
    """Flag of eigenlines ordered by decreasing eigenvalue modulus.

    For loxodromic ``m`` the first ``i`` columns span the sum of the top
    ``i`` eigenspaces; orthonormalizing that ordered eigenbasis gives the same
    frame as a moduli-sorted real Schur form.
    """
    A = m.matrix if isinstance(m, ScaledMatrix) else np.asarray(m, dtype=float)
    return Flag.from_basis(_sorted_eigenbasis(A, descending=True))


def repelling_flag(m) -> Flag:
    A = m.matrix if isinstance(m, ScaledMatrix) else np.asarray(m, dtype=float)
    return Flag.from_basis(_sorted_eigenbasis(A, descending=False))


def busemann_cocycle(g, F: Flag) -> np.ndarray:
    """``sigma(g, F)`` in Jordan coordinates (zero-sum).

    ``p_i = log |g v_1 ^ ... ^ g v_i|`` for the orthonormal frame ``v``; these
    are cumulative sums of ``log |R_kk|`` in the QR factorization of ``g V``.
    """
    if isinstance(g, ScaledMatrix):
        A, shift = g.matrix, g.log_scale
    else:
        A, shift = np.asarray(g, dtype=float), 0.0
    R = np.linalg.qr(A @ F.frame, mode="r")
    diag = np.abs(np.diag(R))
    if np.any(diag == 0) or not np.all(np.isfinite(diag)):
        raise EigenFailure("degenerate exterior-power norm")
    sigma = np.log(diag) + shift
    return sigma - sigma.mean()


def word_cocycle(rep: MatrixRep, w: Word, F: Flag) -> np.ndarray:
    """``sigma(rho(w), F)`` by the cocycle recursion, letter by letter from the right.

    Stable for long words: each step only factors a single generator against
    an orthonormal frame.
    """
    V = F.frame
    sigma = np.zeros(rep.dim)
    for x in reversed(w.letters):
        Q, R = _qr_positive(rep.letters[x] @ V)
        sigma += np.log(np.diag(R))
        V = Q
    return sigma - sigma.mean()


def _split_conjugator(letters) -> tuple[tuple, tuple]:
    """Free reduction written as ``u c u^-1`` with ``c`` cyclically reduced."""
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == x ^ 1:
            stack.pop()
        else:
            stack.append(x)
    i, j = 0, len(stack) - 1
    while i < j and stack[i] == stack[j] ^ 1:
        i += 1
        j -= 1
    return tuple(stack[:i]), tuple(stack[i : j + 1])


def _push(rep: MatrixRep, letters, V: np.ndarray) -> np.ndarray:
    for x in reversed(letters):
        V, _ = _qr_positive(rep.letters[x] @ V)
    return V


def word_attracting_flag(rep: MatrixRep, w: Word, sweeps: int = 200, tol: float = 1e-15) -> Flag:
    """Attracting flag of ``rho(w)`` by simultaneous (orthogonal) iteration.

    The word is split as ``u c u^-1`` with ``c`` cyclically reduced; iteration
    runs on ``c`` only and the result is moved by ``rho(u)``.  Iterating on a
    word whose ends cancel would amplify rounding through the cancelling
    letters.
    """
    u, core = _split_conjugator(w.letters)
    if not core:
        raise NonLoxodromic("the identity has no attracting flag")
    cw = Word(core, w.rank)
    lam = word_jordan(rep, cw).values
    if np.any(-np.diff(lam) <= GAP_TOL):
        raise NonLoxodromic(f"{w} is not loxodromic")
    try:
        F = attracting_flag(evaluate_word(rep, cw))
    except NonLoxodromic:
        F = Flag.standard(rep.dim)
    V = F.frame
    for _ in range(sweeps):
        W = _push(rep, core, V)
        # negative eigenvalues flip column signs; only the subspaces matter
        s = np.sign(np.einsum("ij,ij->j", V, W))
        s[s == 0] = 1.0
        W = W * s
        step = np.max(np.abs(W - V))
        V = W
        if step <= tol:
            break
    return Flag(_push(rep, u, V) if u else V)


def limit_map_periodic(rep: MatrixRep, c: CyclicWord, u: Word | None = None) -> Flag:
    """Limit flag at the boundary point ``u c^infinity``: the attracting flag of ``rho(u c u^-1)``."""
    w = c.word() if isinstance(c, CyclicWord) else c
    if u is not None and u.letters:
        w = u * w * u.inverse()
    return word_attracting_flag(rep, w)
