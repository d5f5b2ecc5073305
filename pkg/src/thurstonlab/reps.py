"""Matrix representations of free groups into PGL(d, R).

Words are evaluated with running renormalization (:class:`ScaledMatrix`).
Jordan and Cartan projections of word images are computed on exterior
powers: ``lambda_1 + ... + lambda_i`` is the log spectral radius of the
``i``-th compound matrix of ``rho(w)``, which is formed as the product of the
generators' compounds.  This keeps every partial sum at the accuracy of a top
eigenvalue, even when the eigenvalues of ``rho(w)`` span many orders of
magnitude.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EigenFailure,
    IndexOutOfRange,
    NonLoxodromicWarning,
    RankMismatch,
    SingularGenerator,
    UnknownPreset,
    CertificateFailed,
)
from .words import CyclicWord, Word, letter_name

COND_LIMIT = 1e12
GAP_TOL = 1e-8
BATCH = 20_000


@dataclass(frozen=True)
class ScaledMatrix:
    """``exp(log_scale) * matrix`` with ``max |matrix| = 1``."""

    matrix: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def of(cls, A, log_scale: float = 0.0) -> "ScaledMatrix":
        A = np.array(A, dtype=float)
        s = float(np.max(np.abs(A)))
        if s == 0:
            raise SingularGenerator("zero matrix")
        return cls(A / s, log_scale + math.log(s))

    @classmethod
    def identity(cls, d: int) -> "ScaledMatrix":
        return cls(np.eye(d), 0.0)

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        return ScaledMatrix.of(self.matrix @ other.matrix, self.log_scale + other.log_scale)

    def to_array(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def compound(A: np.ndarray, k: int) -> np.ndarray:
    """``k``-th compound matrix (action on the ``k``-th exterior power), lexicographic basis.

    Accepts a stack of matrices with shape ``(..., d, d)``.
    """
    A = np.asarray(A)
    d = A.shape[-1]
    subsets = list(combinations(range(d), k))
    idx = np.array(subsets)
    rows = idx[:, None, :, None]
    cols = idx[None, :, None, :]
    sub = A[..., rows, cols]
    return np.linalg.det(sub)


def compound_derivative(A: np.ndarray, dA: np.ndarray, k: int) -> np.ndarray:
    """Directional derivative of :func:`compound` at ``A`` along ``dA`` (complex step)."""
    h = 1e-30
    return compound(A.astype(complex) + 1j * h * dA, k).imag / h


class MatrixRep:
    """Representation of a free group given by one matrix per generator.

    Generators are stored projectively, rescaled to unit absolute determinant.
    """

    def __init__(self, generators: Sequence, label: str | None = None, meta: dict | None = None):
        mats = [np.array(g, dtype=float) for g in generators]
        if len(mats) < 1:
            raise ValueError("need at least one generator")
        d = mats[0].shape[0]
        normed = []
        for k, A in enumerate(mats):
            if A.shape != (d, d):
                raise ValueError("generator matrices must be square and of equal size")
            if not np.all(np.isfinite(A)) or np.linalg.cond(A) > COND_LIMIT:
                raise SingularGenerator(f"generator {letter_name(2 * k)} is (nearly) singular")
            det = abs(np.linalg.det(A))
            normed.append(A / det ** (1.0 / d))
        self.generators = normed
        self.rank = len(normed)
        self.dim = d
        self.label = label
        self.meta = dict(meta or {})

    @cached_property
    def letters(self) -> list[np.ndarray]:
        out = []
        for A in self.generators:
            out.append(A)
            out.append(np.linalg.inv(A))
        return out

    @cached_property
    def letter_compounds(self) -> list[np.ndarray]:
        """``[k-1]`` holds the stack of ``k``-th compounds of all letters, ``k = 1..d-1``."""
        stack = np.array(self.letters)
        return [compound(stack, k) for k in range(1, self.dim)]

    @cached_property
    def letter_logdet(self) -> np.ndarray:
        return np.array([math.log(abs(np.linalg.det(A))) for A in self.letters])

    def conjugate(self, P) -> "MatrixRep":
        P = np.asarray(P, dtype=float)
        Pi = np.linalg.inv(P)
        return MatrixRep([P @ A @ Pi for A in self.generators], label=self.label)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "dim": self.dim,
            "generators": [A.ravel().tolist() for A in self.generators],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixRep":
        d = int(data["dim"])
        gens = [np.array(g, dtype=float).reshape(d, d) for g in data["generators"]]
        if "rank" in data and int(data["rank"]) != len(gens):
            raise RankMismatch("rank does not match the number of generators")
        return cls(gens, label=data.get("label"))


def _check_word(rep: MatrixRep, letters: Sequence[int]) -> None:
    for x in letters:
        if not 0 <= x < 2 * rep.rank:
            raise RankMismatch(f"letter {x} outside rank {rep.rank}")


def evaluate_word(rep: MatrixRep, w) -> ScaledMatrix:
    """Image of a word (or class representative) as a renormalized product."""
    letters = w.letters
    _check_word(rep, letters)
    acc = ScaledMatrix.identity(rep.dim)
    for x in letters:
        acc = acc @ ScaledMatrix.of(rep.letters[x])
    return acc


@dataclass(frozen=True)
class JordanVector:
    """Sorted, zero-sum vector of log moduli (eigenvalues or singular values)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(np.diff(v) > 1e-9 * (1 + np.abs(v).max())):
            raise ValueError("Jordan vector must be nonincreasing")
        if abs(v.sum()) > 1e-10 * max(1.0, float(np.abs(v).max())):
            raise ValueError("Jordan vector must sum to zero")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_logs(cls, logs) -> "JordanVector":
        v = np.sort(np.asarray(logs, dtype=float))[::-1]
        return cls(v - v.mean())

    def gaps(self) -> np.ndarray:
        return -np.diff(self.values)

    def __len__(self) -> int:
        return len(self.values)


def jordan_projection(m: ScaledMatrix) -> JordanVector:
    """Sorted log-moduli of eigenvalues, zero-sum normalized."""
    try:
        ev = np.linalg.eigvals(m.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    mod = np.abs(ev)
    if np.any(mod == 0):
        raise EigenFailure("zero eigenvalue")
    jv = JordanVector.from_logs(np.log(mod) + m.log_scale)
    if np.any(jv.gaps() < GAP_TOL):
        warnings.warn("eigenvalue moduli closer than 1e-8", NonLoxodromicWarning, stacklevel=2)
    return jv


def cartan_projection(m: ScaledMatrix) -> JordanVector:
    """Sorted log singular values, zero-sum normalized."""
    sv = np.linalg.svd(m.matrix, compute_uv=False)
    if np.any(sv == 0):
        raise EigenFailure("singular matrix")
    return JordanVector.from_logs(np.log(sv) + m.log_scale)


def _reduced(letters, cyclic: bool) -> tuple:
    """Free (and optionally cyclic) reduction; products with cancelling pairs lose precision."""
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == x ^ 1:
            stack.pop()
        else:
            stack.append(x)
    i, j = 0, len(stack) - 1
    while cyclic and i < j and stack[i] == stack[j] ^ 1:
        i += 1
        j -= 1
    return tuple(stack[i : j + 1])


def _group_by_length(words) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for k, w in enumerate(words):
        groups.setdefault(len(w), []).append(k)
    return groups


def _products(stack: np.ndarray, letters: np.ndarray):
    """Renormalized products of ``stack[letters[j, 0]] @ stack[letters[j, 1]] @ ...``."""
    n, length = letters.shape
    D = stack.shape[-1]
    M = np.broadcast_to(np.eye(D), (n, D, D)).copy()
    logs = np.zeros(n)
    for t in range(length):
        M = M @ stack[letters[:, t]]
        s = np.max(np.abs(M), axis=(1, 2))
        M /= s[:, None, None]
        logs += np.log(s)
    return M, logs


def _partial_sums(rep: MatrixRep, words, kind: str) -> np.ndarray:
    """Rows ``(S_1, ..., S_d)`` with ``S_i = lambda_1 + ... + lambda_i`` (unnormalized)."""
    d = rep.dim
    words = [_reduced(w.letters, cyclic=kind == "jordan") for w in words]
    out = np.zeros((len(words), d))
    for length, members in _group_by_length(words).items():
        for start in range(0, len(members), BATCH):
            chunk = members[start : start + BATCH]
            letters = np.array([words[k] for k in chunk], dtype=int).reshape(len(chunk), length)
            _check_word(rep, letters.ravel())
            sums = np.zeros((len(chunk), d))
            for i in range(1, d):
                M, logs = _products(rep.letter_compounds[i - 1], letters)
                if kind == "jordan":
                    top = np.max(np.abs(np.linalg.eigvals(M)), axis=1)
                else:
                    top = np.linalg.norm(M, ord=2, axis=(1, 2))
                sums[:, i - 1] = np.log(top) + logs
            sums[:, d - 1] = rep.letter_logdet[letters].sum(axis=1)
            out[chunk] = sums
    return out


def _vectors_from_sums(sums: np.ndarray) -> np.ndarray:
    lam = np.diff(np.concatenate([np.zeros((len(sums), 1)), sums], axis=1), axis=1)
    lam = -np.sort(-lam, axis=1)
    return lam - lam.mean(axis=1, keepdims=True)


def jordan_vectors(rep: MatrixRep, words) -> np.ndarray:
    """Jordan projections of many words at once, shape ``(len(words), d)``."""
    if not words:
        return np.zeros((0, rep.dim))
    return _vectors_from_sums(_partial_sums(rep, words, "jordan"))


def cartan_vectors(rep: MatrixRep, words) -> np.ndarray:
    if not words:
        return np.zeros((0, rep.dim))
    return _vectors_from_sums(_partial_sums(rep, words, "cartan"))


def word_jordan(rep: MatrixRep, w) -> JordanVector:
    """Jordan projection of ``rho(w)`` through exterior powers."""
    return JordanVector(jordan_vectors(rep, [w])[0])


def word_cartan(rep: MatrixRep, w) -> JordanVector:
    return JordanVector(cartan_vectors(rep, [w])[0])


@dataclass(frozen=True)
class LengthFunctional:
    coeffs: np.ndarray
    tag: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def __call__(self, lam) -> float | np.ndarray:
        vals = lam.values if isinstance(lam, JordanVector) else np.asarray(lam)
        return vals @ self.coeffs

    def __mul__(self, c: float) -> "LengthFunctional":
        return LengthFunctional(c * self.coeffs, f"{c:g}*{self.tag}")

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"preset": self.tag, "coeffs": self.coeffs.tolist()}


PRESETS = ("alpha_i", "lambda1", "hilbert", "two_lambda1", "unstable_jacobian")


def functional_preset(name: str, d: int) -> LengthFunctional:
    """Named length functionals on PGL(d) Cartan coordinates.

    ``alpha<i>`` (or ``alpha_<i>``) is the simple root ``lambda_i - lambda_{i+1}``;
    ``unstable_jacobian`` is ``(d-1) lambda_1 + lambda_d``.
    """
    if d < 2:
        raise IndexOutOfRange("dimension must be at least 2")
    e = np.eye(d)
    key = name.lower()
    if key.startswith("alpha"):
        try:
            i = int(key[5:].lstrip("_"))
        except ValueError:
            raise UnknownPreset(name) from None
        if not 1 <= i < d:
            raise IndexOutOfRange(f"simple root alpha{i} needs 1 <= i < {d}")
        return LengthFunctional(e[i - 1] - e[i], f"alpha{i}")
    if key == "lambda1":
        return LengthFunctional(e[0], key)
    if key == "hilbert":
        return LengthFunctional(e[0] - e[d - 1], key)
    if key == "two_lambda1":
        return LengthFunctional(2 * e[0], key)
    if key == "unstable_jacobian":
        return LengthFunctional((d - 1) * e[0] + e[d - 1], key)
    raise UnknownPreset(f"unknown functional preset {name!r}")


def opposition_involution(f: LengthFunctional) -> LengthFunctional:
    """``(c_1, ..., c_d) -> (-c_d, ..., -c_1)``."""
    tag = f.tag if f.tag == "hilbert" else f"iota({f.tag})"
    return LengthFunctional(-f.coeffs[::-1], tag)


def contragredient(rep: MatrixRep) -> MatrixRep:
    """Transpose-inverse representation."""
    label = f"{rep.label}*" if rep.label else None
    return MatrixRep([np.linalg.inv(A).T for A in rep.generators], label=label)


def sym_power_matrix(A: np.ndarray, d: int) -> np.ndarray:
    """Action of a 2x2 matrix on ``Sym^{d-1}(R^2)``.

    Basis: symmetrized tensors ``binom(n, k) e1^{n-k} e2^k``; in this basis the
    unipotent ``[[1,1],[0,1]]`` squares to ``[[1,2,1],[0,1,1],[0,0,1]]``.
    """
    a, b = A[0]
    c, dd = A[1]
    n = d - 1
    M = np.zeros((d, d))
    for k in range(d):
        # coefficients of (a e1 + c e2)^(n-k) (b e1 + dd e2)^k in monomials e1^(n-j) e2^j
        for p in range(n - k + 1):
            cp = math.comb(n - k, p) * a ** (n - k - p) * c**p
            for q in range(k + 1):
                M[p + q, k] += cp * math.comb(k, q) * b ** (k - q) * dd**q
    w = np.array([math.comb(n, j) for j in range(d)], dtype=float)
    return M * w[None, :] / w[:, None]


def sym_power(rep: MatrixRep, d: int) -> MatrixRep:
    if rep.dim != 2:
        raise ValueError("symmetric powers need a 2-dimensional representation")
    if d < 2:
        raise ValueError("target dimension must be at least 2")
    label = f"sym{d - 1}({rep.label})" if rep.label else f"sym{d - 1}"
    return MatrixRep([sym_power_matrix(A, d) for A in rep.generators], label=label)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rp1_angle(v) -> float:
    return math.atan2(v[1], v[0]) % math.pi


def _arc_contains(center: float, half: float, angle: float) -> bool:
    diff = (angle - center + math.pi / 2) % math.pi - math.pi / 2
    return abs(diff) < half


def schottky_certificate(rep: MatrixRep, margin: float = 1e-9) -> dict:
    """Ping-pong check on RP^1 for a rank-2 SL(2) representation.

    Each letter ``x`` gets an arc ``D_x`` around its attracting fixed point,
    with half-width half the smallest gap between the four fixed points.
    The certificate holds when ``x`` maps the complement of ``D_{x^-1}`` into
    ``D_x``; the map is monotone on RP^1, so it suffices to check the two
    endpoints of the complementary arc and the image of its midpoint.
    """
    if rep.dim != 2:
        raise ValueError("certificate is only defined in dimension 2")
    attract = []
    for A in rep.letters:
        vals, vecs = np.linalg.eig(A)
        if np.iscomplexobj(vals) and np.any(np.abs(vals.imag) > 0):
            return {"passed": False, "reason": "elliptic generator"}
        attract.append(_rp1_angle(vecs[:, int(np.argmax(np.abs(vals)))].real))
    pts = sorted(attract)
    gaps = [(pts[(k + 1) % len(pts)] - pts[k]) % math.pi for k in range(len(pts))]
    half = min(gaps) / 2 - margin
    if half <= 0:
        return {"passed": False, "reason": "coincident fixed points", "half_width": half}
    checks = []
    for x, A in enumerate(rep.letters):
        rep_center = attract[x ^ 1]
        ends = (rep_center + half, rep_center - half + math.pi)
        mid = rep_center + math.pi / 2
        ok = True
        for ang in (*ends, mid):
            v = A @ np.array([math.cos(ang), math.sin(ang)])
            ok &= _arc_contains(attract[x], half, _rp1_angle(v))
        checks.append(bool(ok))
    return {"passed": all(checks), "half_width": half, "fixed_points": attract, "letters": checks}


def schottky_sl2(t_a: float, t_b: float | None = None, separation: float = math.pi / 4) -> MatrixRep:
    """Rank-2 Schottky group in SL(2, R).

    ``a = diag(e^{t_a/2}, e^{-t_a/2})`` (translation length ``t_a``) and ``b`` is
    ``diag(e^{t_b/2}, e^{-t_b/2})`` conjugated by the rotation of angle
    ``separation``; ``pi/4`` spaces the four fixed points evenly on RP^1.
    A failed ping-pong certificate emits :class:`CertificateFailed` and is
    recorded in ``rep.meta["certificate"]``.
    """
    t_b = t_a if t_b is None else t_b
    if t_a <= 0 or t_b <= 0:
        raise ValueError("translation lengths must be positive (trace > 2)")
    if not 0 < separation < math.pi / 2:
        raise ValueError("separation must lie in (0, pi/2)")
    a = np.diag([math.exp(t_a / 2), math.exp(-t_a / 2)])
    R = rotation(separation)
    b = R @ np.diag([math.exp(t_b / 2), math.exp(-t_b / 2)]) @ R.T
    rep = MatrixRep([a, b], label=f"schottky({t_a:g},{t_b:g},{separation:g})")
    cert = schottky_certificate(rep)
    rep.meta["certificate"] = cert
    if not cert["passed"]:
        warnings.warn("Schottky ping-pong certificate failed", CertificateFailed, stacklevel=2)
    return rep


def random_loxodromic_rep(
    rank: int, dim: int, rng: np.random.Generator, spread: float = 1.5, tilt: float = 0.3
) -> MatrixRep:
    """Generators ``P D P^-1`` with well separated real eigenvalues.

    ``spread`` sets the log-gap between consecutive eigenvalues and ``tilt``
    how far the eigenbases are from each other (random orthogonal rotations
    times near-identity shears).
    """
    gens = []
    for _ in range(rank):
        gaps = spread * (1 + 0.5 * rng.random(dim - 1))
        logs = np.concatenate([[0.0], -np.cumsum(gaps)])
        logs -= logs.mean()
        Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        P = Q @ (np.eye(dim) + tilt * rng.normal(size=(dim, dim)))
        gens.append(P @ np.diag(np.exp(logs)) @ np.linalg.inv(P))
    return MatrixRep(gens, label=f"random{dim}")


def random_conjugate(rep: MatrixRep, rng: np.random.Generator, scale: float = 0.3) -> MatrixRep:
    """``P rho P^-1`` for a random well-conditioned ``P = I + scale * N``."""
    P = np.eye(rep.dim) + scale * rng.normal(size=(rep.dim, rep.dim))
    return rep.conjugate(P)


@dataclass(frozen=True)
class GapRow:
    root: int
    slope: float
    intercept: float
    min_ratio: float


@dataclass
class AnosovReport:
    rows: list
    n_classes: int
    max_length: int
    not_anosov: bool
    slope_floor: float = field(default=1e-3)

    def to_dict(self) -> dict:
        return {
            "roots": [r.__dict__ for r in self.rows],
            "n_classes": self.n_classes,
            "max_length": self.max_length,
            "not_anosov": self.not_anosov,
        }


def anosov_gap_report(rep: MatrixRep, classes: Sequence, slope_floor: float = 1e-3) -> AnosovReport:
    """Least-squares slope and intercept of ``alpha_i(mu(rho(gamma)))`` against ``|gamma|``.

    Diagnostic only: a root with slope below ``slope_floor`` flags the
    representation as not Anosov on the sample.
    """
    classes = list(classes)
    if not classes:
        raise ValueError("need a nonempty class sample")
    mu = cartan_vectors(rep, classes)
    lengths = np.array([len(c.letters) for c in classes], dtype=float)
    rows = []
    for i in range(rep.dim - 1):
        alpha = mu[:, i] - mu[:, i + 1]
        if np.ptp(lengths) > 0:
            slope, intercept = np.polyfit(lengths, alpha, 1)
        else:
            slope, intercept = float(np.mean(alpha / lengths)), 0.0
        rows.append(GapRow(i + 1, float(slope), float(intercept), float(np.min(alpha / lengths))))
    flagged = any(r.slope < slope_floor for r in rows)
    return AnosovReport(rows, len(classes), int(lengths.max()), flagged, slope_floor)


@dataclass
class RepFamily:
    """Analytic family ``s -> rho_s`` given by generator matrices as functions of ``s``.

    ``derivatives`` are the generator velocities at ``s = 0``; when omitted they
    are taken by central differences of ``path``.
    """

    path: Callable[[float], Sequence[np.ndarray]]
    derivatives: Sequence[np.ndarray] | None = None
    interval: tuple = (-1.0, 1.0)
    label: str | None = None

    def at(self, s: float) -> MatrixRep:
        return MatrixRep(self.path(s), label=self.label)

    @cached_property
    def base(self) -> MatrixRep:
        return self.at(0.0)

    def velocities(self) -> list[np.ndarray]:
        """Generator velocities at ``s = 0`` (of the unnormalized path matrices)."""
        if self.derivatives is not None:
            return [np.array(V, dtype=float) for V in self.derivatives]
        h = 1e-6
        plus, minus = self.path(h), self.path(-h)
        return [(np.array(p, dtype=float) - np.array(m, dtype=float)) / (2 * h) for p, m in zip(plus, minus)]

    @classmethod
    def linear(cls, generators, velocities, label=None) -> "RepFamily":
        gens = [np.array(A, dtype=float) for A in generators]
        vel = [np.array(V, dtype=float) for V in velocities]
        return cls(lambda s: [A + s * V for A, V in zip(gens, vel)], vel, label=label)
