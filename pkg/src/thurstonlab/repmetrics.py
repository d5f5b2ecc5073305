"""Length spectra, entropy and the asymmetric distance for representations.

Suprema over conjugacy classes are taken over all classes up to a word-length
cutoff, so every distance here is a lower bound of the true value at that
cutoff.  Entropies are regression estimates with standard errors.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EntropyUnstable,
    InsufficientData,
    NonPositiveLength,
    NonSimpleEigenvalue,
    RankMismatch,
)
from .reps import (
    GAP_TOL,
    BATCH,
    LengthFunctional,
    MatrixRep,
    RepFamily,
    _group_by_length,
    compound,
    compound_derivative,
    jordan_vectors,
)
from .words import CyclicWord, enumerate_classes

MIN_COUNT = 100
GRID_POINTS = 48
UNSTABLE_SPREAD = 0.10
ENTROPY_STEP = 1e-2
FD_STEP = 1e-5
TIE_TOL = 1e-9
RAMP_FRACTION = 1 / 8


@dataclass
class LengthTable:
    classes: list
    values: np.ndarray
    cutoff: int
    functional: LengthFunctional
    label: str | None = None

    def __len__(self) -> int:
        return len(self.classes)

    def as_dict(self) -> dict:
        return {str(c): float(v) for c, v in zip(self.classes, self.values)}

    def word_lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.classes])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["word", "length", "value"])
        for c, v in zip(self.classes, self.values):
            writer.writerow([str(c), c.length, f"{v:.12g}"])
        return buf.getvalue()


def _argmax_shortest(values: np.ndarray, rel: float = 1e-12) -> int:
    """First index attaining the maximum up to relative ``rel``; classes are listed shortest first."""
    top = float(np.max(values))
    return int(np.flatnonzero(values >= top - rel * max(1.0, abs(top)))[0])


def _classes(rank: int, cutoff: int, primitive_only: bool = False) -> list:
    return list(enumerate_classes(rank, cutoff, primitive_only=primitive_only))


def length_spectrum(
    rep: MatrixRep, functional: LengthFunctional, classes: Sequence[CyclicWord], cutoff: int | None = None
) -> LengthTable:
    """``L(gamma) = phi(lambda(rho(gamma)))`` for each class; all values must be positive."""
    classes = list(classes)
    if functional.dim != rep.dim:
        raise RankMismatch(f"functional has {functional.dim} coefficients, representation has dimension {rep.dim}")
    for c in classes[:1]:
        if c.rank != rep.rank:
            raise RankMismatch(f"classes over rank {c.rank}, representation has rank {rep.rank}")
    values = jordan_vectors(rep, classes) @ functional.coeffs
    bad = np.flatnonzero(~(values > 0))
    if len(bad):
        k = int(bad[0])
        raise NonPositiveLength(
            f"length {values[k]:.6g} of class {classes[k]} is not positive: functional {functional.tag} "
            "is outside the dual cone of this representation"
        )
    if cutoff is None:
        cutoff = max((c.length for c in classes), default=0)
    return LengthTable(classes, values, cutoff, functional, rep.label)


@dataclass
class EntropyEstimate:
    value: float
    stderr: float
    window: tuple
    thresholds: np.ndarray
    counts: np.ndarray
    cutoff: int
    half_slopes: tuple = (math.nan, math.nan)
    unstable: bool = False
    n_complete: int = 0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "window": list(self.window),
            "cutoff": self.cutoff,
            "n_complete": self.n_complete,
            "half_slopes": list(self.half_slopes),
            "unstable": self.unstable,
        }


def _ols(x: np.ndarray, y: np.ndarray):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if len(x) > 2:
        resid = y - A @ coef
        s2 = float(resid @ resid) / (len(x) - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        se = math.sqrt(max(cov[0, 0], 0.0))
    else:
        se = math.inf
    return float(coef[0]), se


def smoothed_count(Ls: np.ndarray, t: np.ndarray, w: float) -> np.ndarray:
    """``sum_i clip((t - L_i)/w + 1/2, 0, 1)`` for sorted ``Ls``.

    A counting function with each jump spread over a ramp of width ``w``;
    it is Lipschitz in every ``L_i``, so tied lengths that split apart move
    the count continuously.
    """
    out = np.empty(len(t))
    for k, tk in enumerate(t):
        lo = np.searchsorted(Ls, tk - w / 2, side="right")
        hi = np.searchsorted(Ls, tk + w / 2, side="left")
        out[k] = lo + np.sum(np.clip((tk - Ls[lo:hi]) / w + 0.5, 0.0, 1.0))
    return out


def entropy_from_lengths(lengths, word_lengths, cutoff: int) -> EntropyEstimate:
    """Growth rate of ``N(t) = #{classes : L <= t}``.

    Only thresholds below ``T* = min{L : |gamma| = cutoff}`` are used: for a
    length spectrum that grows with word length, classes beyond the cutoff
    have lengths above ``T*`` and counts below it are complete.  Thresholds
    are spaced uniformly from the 100th smallest length to ``T*`` and ``N``
    is the ramp-smoothed count of :func:`smoothed_count`, which keeps the estimate continuous in the lengths.  ``log(t N(t))`` is
    regressed on ``t`` over the upper half of the threshold range; the
    ``log t`` term removes the ``e^{ht}/(ht)`` prefactor of the orbit count.
    """
    L = np.asarray(lengths, dtype=float)
    wl = np.asarray(word_lengths)
    top = wl == cutoff
    if not np.any(top):
        raise InsufficientData(f"no classes of word length {cutoff}")
    t_star = float(np.min(L[top]))
    Ls = np.sort(L[L <= t_star * (1 + TIE_TOL)])
    n_c = len(Ls)
    if n_c < MIN_COUNT:
        raise InsufficientData(f"only {n_c} classes are complete below length {t_star:.6g} (need {MIN_COUNT})")
    t_lo = float(Ls[MIN_COUNT - 1])
    if not t_star > t_lo:
        raise InsufficientData("no threshold range above the 100th length")
    # ramp width tied to the threshold range: smooth in the lengths, and wide
    # enough to bridge the gaps of integer-valued spectra.  Smoothing an
    # exponential count only rescales it, so the slope is unaffected.
    # The top ramp ends at T*.
    w = RAMP_FRACTION * (t_star - t_lo)
    t = np.linspace(t_lo, t_star - w / 2, GRID_POINTS)
    N = smoothed_count(Ls, t, w)
    win = t >= 0.5 * (t_lo + t_star)
    x, y = t[win], np.log(t[win] * N[win])
    if len(x) < 4:
        raise InsufficientData("fewer than four thresholds in the regression window")
    slope, se = _ols(x, y)
    half = len(x) // 2
    s1, _ = _ols(x[: half + 1], y[: half + 1])
    s2, _ = _ols(x[half:], y[half:])
    unstable = abs(s1 - s2) > UNSTABLE_SPREAD * abs(slope)
    if unstable:
        warnings.warn(
            f"entropy slopes on the two halves of the window differ: {s1:.4g} vs {s2:.4g}",
            EntropyUnstable,
            stacklevel=3,
        )
    if not slope > 0:
        raise InsufficientData("nonpositive growth rate")
    return EntropyEstimate(
        slope, se, (float(x[0]), float(x[-1])), t, N, cutoff, (s1, s2), bool(unstable), n_c
    )


def entropy_estimate(
    rep: MatrixRep, functional: LengthFunctional, cutoff: int, primitive_only: bool = False
) -> EntropyEstimate:
    table = length_spectrum(rep, functional, _classes(rep.rank, cutoff, primitive_only), cutoff)
    return entropy_from_lengths(table.values, table.word_lengths(), cutoff)


def word_length_entropy(rank: int, cutoff: int, primitive_only: bool = False) -> EntropyEstimate:
    """Entropy estimate for the word-length spectrum (unit roof on the free-group coding)."""
    classes = _classes(rank, cutoff, primitive_only)
    wl = np.array([c.length for c in classes])
    return entropy_from_lengths(wl.astype(float), wl, cutoff)


@dataclass
class RepDistanceReport:
    value: float
    maximizing_class: CyclicWord
    cutoff: int
    h1: float
    h2: float
    h1_stderr: float
    h2_stderr: float
    trace: list
    ratio: float
    symmetric_sum: float
    entropy_unstable: bool = False
    lower_bound: bool = True
    functional: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "maximizing_class": str(self.maximizing_class),
            "cutoff": self.cutoff,
            "h1": self.h1,
            "h2": self.h2,
            "h1_stderr": self.h1_stderr,
            "h2_stderr": self.h2_stderr,
            "trace": [{"cutoff": n, "value": v} for n, v in self.trace],
            "length_ratio": self.ratio,
            "symmetric_sum": self.symmetric_sum,
            "entropy_unstable": self.entropy_unstable,
            "lower_bound": self.lower_bound,
            "functional": self.functional,
        }


def _distance_from_tables(t1: LengthTable, t2: LengthTable, e1, e2, cutoff: int) -> RepDistanceReport:
    h1, h2 = e1.value, e2.value
    ratios = t2.values / t1.values
    k = _argmax_shortest(ratios)
    log_h = math.log(h2 / h1)
    value = log_h + math.log(ratios[k])
    back = -log_h + math.log(float(np.max(t1.values / t2.values)))
    wl = t1.word_lengths()
    trace = []
    best = -math.inf
    for n in range(1, cutoff + 1):
        sel = wl == n
        if np.any(sel):
            best = max(best, float(np.max(ratios[sel])))
        trace.append((n, log_h + math.log(best)))
    return RepDistanceReport(
        value,
        t1.classes[k],
        cutoff,
        h1,
        h2,
        e1.stderr,
        e2.stderr,
        trace,
        float(ratios[k]),
        value + back,
        bool(e1.unstable or e2.unstable),
        True,
        t1.functional.tag,
    )


def dth_reps(
    rep1: MatrixRep,
    rep2: MatrixRep,
    functional: LengthFunctional,
    cutoff: int,
    entropies: tuple | None = None,
    primitive_only: bool = False,
) -> RepDistanceReport:
    """``log(h2/h1) + log max L2/L1`` over classes of word length ``<= cutoff``.

    ``entropies`` may supply ``(h1, h2)`` as numbers or :class:`EntropyEstimate`
    objects; otherwise both are estimated at the same cutoff.
    """
    if rep1.rank != rep2.rank:
        raise RankMismatch("representations of free groups of different rank")
    classes = _classes(rep1.rank, cutoff, primitive_only)
    t1 = length_spectrum(rep1, functional, classes, cutoff)
    t2 = length_spectrum(rep2, functional, classes, cutoff)
    if entropies is None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", EntropyUnstable)
            e1 = entropy_from_lengths(t1.values, t1.word_lengths(), cutoff)
            e2 = entropy_from_lengths(t2.values, t2.word_lengths(), cutoff)
        for w in caught:
            warnings.warn(w.message, w.category, stacklevel=2)
    else:
        e1, e2 = (e if isinstance(e, EntropyEstimate) else _fixed_entropy(e, cutoff) for e in entropies)
    return _distance_from_tables(t1, t2, e1, e2, cutoff)


def _fixed_entropy(h: float, cutoff: int) -> EntropyEstimate:
    return EntropyEstimate(float(h), 0.0, (math.nan, math.nan), np.array([]), np.array([]), cutoff)


def _letter_pairs(family: RepFamily, k: int):
    """``k``-th compounds of all letters at ``s = 0`` with their derivatives."""
    gens = [np.array(A, dtype=float) for A in family.path(0.0)]
    vel = family.velocities()
    mats, ders = [], []
    for A, V in zip(gens, vel):
        Ai = np.linalg.inv(A)
        mats += [A, Ai]
        ders += [V, -Ai @ V @ Ai]
    C = np.array([compound(M, k) for M in mats])
    dC = np.array([compound_derivative(M, D, k) for M, D in zip(mats, ders)])
    return C, dC


def _log_radius_derivatives(C, dC, letters: np.ndarray):
    """``d/ds log |top eigenvalue|`` of products of compounds, plus a simplicity mask."""
    n, length = letters.shape
    D = C.shape[-1]
    M = np.broadcast_to(np.eye(D), (n, D, D)).copy()
    dM = np.zeros((n, D, D))
    for t in range(length):
        a, da = C[letters[:, t]], dC[letters[:, t]]
        dM = dM @ a + M @ da
        M = M @ a
        s = np.max(np.abs(M), axis=(1, 2))[:, None, None]
        M /= s
        dM /= s
    vals, vecs = np.linalg.eig(M)
    mod = np.abs(vals)
    order = np.argsort(-mod, axis=1)
    top = order[:, 0]
    rows = np.arange(n)
    if D > 1:
        second = mod[rows, order[:, 1]]
        simple = np.log(mod[rows, top]) - np.log(np.maximum(second, 1e-300)) > GAP_TOL
    else:
        simple = np.ones(n, dtype=bool)
    inv = np.linalg.inv(vecs)
    l = inv[rows, top, :]
    r = vecs[rows, :, top]
    num = np.einsum("ni,nij,nj->n", l, dM.astype(complex), r)
    deriv = np.real(num / vals[rows, top])
    return deriv, simple


def _fd_lengths(family: RepFamily, functional: LengthFunctional, classes, step: float = FD_STEP) -> np.ndarray:
    plus = jordan_vectors(family.at(step), classes) @ functional.coeffs
    minus = jordan_vectors(family.at(-step), classes) @ functional.coeffs
    return (plus - minus) / (2 * step)


def length_derivatives(family: RepFamily, functional: LengthFunctional, classes: Sequence[CyclicWord]):
    """``dL/ds`` at ``s = 0`` for each class, with the method used per class.

    Simple-eigenvalue perturbation on every exterior power; classes where a
    top eigenvalue is not simple fall back to central differences.
    """
    classes = list(classes)
    base = family.base
    d = base.dim
    dS = np.zeros((len(classes), d))
    simple = np.ones(len(classes), dtype=bool)
    pairs = [_letter_pairs(family, k) for k in range(1, d)]
    gens = [np.array(A, dtype=float) for A in family.path(0.0)]
    vel = family.velocities()
    trace_der = []
    for A, V in zip(gens, vel):
        tr = float(np.trace(np.linalg.solve(A, V)))
        trace_der += [tr, -tr]
    trace_der = np.array(trace_der)
    for length, members in _group_by_length(classes).items():
        for start in range(0, len(members), BATCH):
            chunk = members[start : start + BATCH]
            letters = np.array([classes[k].letters for k in chunk], dtype=int).reshape(len(chunk), length)
            for i in range(1, d):
                C, dC = pairs[i - 1]
                der, ok = _log_radius_derivatives(C, dC, letters)
                dS[chunk, i - 1] = der
                simple[chunk] &= ok
            dS[chunk, d - 1] = trace_der[letters].sum(axis=1)
    dlam = np.diff(np.concatenate([np.zeros((len(classes), 1)), dS], axis=1), axis=1)
    dlam -= dlam.mean(axis=1, keepdims=True)
    values = dlam @ functional.coeffs
    methods = np.where(simple, "perturbation", "finite-difference")
    if not np.all(simple):
        bad = [classes[k] for k in np.flatnonzero(~simple)]
        values[~simple] = _fd_lengths(family, functional, bad)
    return values, methods


def length_derivative(family: RepFamily, functional: LengthFunctional, c: CyclicWord) -> float:
    return float(length_derivatives(family, functional, [c])[0][0])


def length_derivative_strict(family: RepFamily, functional: LengthFunctional, c: CyclicWord) -> float:
    """As :func:`length_derivative` but raising instead of falling back."""
    values, methods = length_derivatives(family, functional, [c])
    if methods[0] != "perturbation":
        raise NonSimpleEigenvalue(f"top eigenvalue of an exterior power of {c} is not simple")
    return float(values[0])


@dataclass
class FinslerReport:
    value: float
    maximizing_class: CyclicWord
    cutoff: int
    h: float
    h_prime: float
    tolerance: float
    fallback_classes: int = 0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "maximizing_class": str(self.maximizing_class),
            "cutoff": self.cutoff,
            "h": self.h,
            "h_prime": self.h_prime,
            "tolerance": self.tolerance,
            "fallback_classes": self.fallback_classes,
        }


def finsler_norm_reps(
    family: RepFamily, functional: LengthFunctional, cutoff: int, step: float = ENTROPY_STEP
) -> FinslerReport:
    """``sup over classes of (h' L + h L') / (h L)`` at ``s = 0``.

    ``h'`` comes from central differences of the entropy estimate at ``+-step``.
    The reported tolerance combines the entropy standard errors.
    """
    base = family.base
    classes = _classes(base.rank, cutoff)
    table = length_spectrum(base, functional, classes, cutoff)
    e0 = entropy_from_lengths(table.values, table.word_lengths(), cutoff)
    ep = entropy_estimate(family.at(step), functional, cutoff)
    em = entropy_estimate(family.at(-step), functional, cutoff)
    h, hp = e0.value, (ep.value - em.value) / (2 * step)
    dL, methods = length_derivatives(family, functional, classes)
    ratios = dL / table.values
    k = _argmax_shortest(ratios)
    value = hp / h + float(ratios[k])
    tol = (math.hypot(ep.stderr, em.stderr) / (2 * step) + abs(hp) * e0.stderr / h) / h
    return FinslerReport(value, classes[k], cutoff, h, hp, tol, int(np.sum(methods != "perturbation")))


def stretch_family(rep: MatrixRep, target: MatrixRep) -> RepFamily:
    """Straight-line family ``(1-s) rho + s rho_target`` in generator space."""
    if rep.rank != target.rank or rep.dim != target.dim:
        raise RankMismatch("representations must share rank and dimension")
    vel = [B - A for A, B in zip(rep.generators, target.generators)]
    return RepFamily.linear(rep.generators, vel, label=rep.label)
