"""Words in free groups and conjugacy classes.

Letters are integer codes: ``2*i`` is the ``i``-th generator and ``2*i + 1``
its inverse, so ``code ^ 1`` inverts a letter.  Printed words use ``a, b, c``
for generators and ``A, B, C`` for their inverses.  Lexicographic order is
the order of codes (``a < A < b < B < ...``).
"""

from __future__ import annotations

import csv
import io
import string
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import BudgetExceeded, IdentityElement, RankMismatch
from .sft import Cycle, SubshiftGraph, build_subshift, min_rotation

DEFAULT_CLASS_CAP = 5_000_000


def letter_name(code: int) -> str:
    ch = string.ascii_lowercase[code >> 1]
    return ch.upper() if code & 1 else ch


def parse_letters(text: str) -> tuple[int, ...]:
    codes = []
    for ch in text.strip():
        k = string.ascii_lowercase.index(ch.lower())
        codes.append(2 * k + (1 if ch.isupper() else 0))
    return tuple(codes)


@dataclass(frozen=True)
class Word:
    letters: tuple
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(x) for x in self.letters))
        for x in self.letters:
            if not 0 <= x < 2 * self.rank:
                raise RankMismatch(f"letter code {x} out of range for rank {self.rank}")

    @classmethod
    def parse(cls, text: str, rank: int) -> "Word":
        return cls(parse_letters(text), rank)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if other.rank != self.rank:
            raise RankMismatch("words over different ranks")
        return Word(self.letters + other.letters, self.rank)

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return self.inverse() ** (-n)
        return Word(self.letters * n, self.rank)

    def inverse(self) -> "Word":
        return Word(tuple(x ^ 1 for x in reversed(self.letters)), self.rank)

    def is_reduced(self) -> bool:
        return all(a != b ^ 1 for a, b in zip(self.letters, self.letters[1:]))

    def __str__(self) -> str:
        return "".join(letter_name(x) for x in self.letters) or "1"


def reduce(w: Word) -> Word:
    """Free reduction by cancelling adjacent inverse pairs."""
    stack: list[int] = []
    for x in w.letters:
        if stack and stack[-1] == x ^ 1:
            stack.pop()
        else:
            stack.append(x)
    return Word(tuple(stack), w.rank)


@dataclass(frozen=True)
class CyclicWord:
    """Conjugacy class of a nontrivial element: cyclically reduced, rotation-minimal."""

    letters: tuple
    rank: int

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def length(self) -> int:
        return len(self.letters)

    def root(self) -> tuple["CyclicWord", int]:
        """Primitive root ``c0`` and exponent ``n`` with ``self = c0 ** n``."""
        n = len(self.letters)
        for p in range(1, n + 1):
            if n % p == 0 and self.letters[:p] * (n // p) == self.letters:
                return CyclicWord(self.letters[:p], self.rank), n // p
        raise AssertionError("unreachable")

    @property
    def is_primitive(self) -> bool:
        return self.root()[1] == 1

    def power(self, n: int) -> "CyclicWord":
        return CyclicWord(self.letters * n, self.rank)

    def word(self) -> Word:
        return Word(self.letters, self.rank)

    def __str__(self) -> str:
        return "".join(letter_name(x) for x in self.letters)


def canonical_class(w: Word) -> CyclicWord:
    letters = list(reduce(w).letters)
    if not letters:
        raise IdentityElement("the identity has no conjugacy class representative here")
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == letters[j] ^ 1:
        i += 1
        j -= 1
    core = letters[i : j + 1]
    return CyclicWord(min_rotation(core), w.rank)


def _necklaces(rank: int, n: int, primitive_only: bool, out: list) -> None:
    """Append cyclically reduced necklaces of length ``n`` in lexicographic order.

    Fredricksen-Kessler-Maiorana prenecklace search, pruned wherever two
    adjacent letters cancel.
    """
    k = 2 * rank
    a = [0] * n

    def gen(t: int, p: int) -> None:
        if t == n:
            if a[n - 1] == a[0] ^ 1:
                return
            if (p == n) if primitive_only else (n % p == 0):
                out.append(tuple(a))
            return
        lo = a[t - p]
        prev_inv = a[t - 1] ^ 1
        for x in range(lo, k):
            if x == prev_inv:
                continue
            a[t] = x
            gen(t + 1, p if x == lo else t + 1)

    for x in range(k):
        a[0] = x
        gen(1, 1)


def enumerate_classes(
    rank: int, max_length: int, primitive_only: bool = False, cap: int = DEFAULT_CLASS_CAP
) -> Iterator[CyclicWord]:
    """Conjugacy classes of word length ``<= max_length``, by length then lexicographically."""
    if rank < 2:
        raise ValueError("rank must be at least 2")
    if max_length < 1:
        raise ValueError("max_length must be at least 1")
    emitted = 0
    for n in range(1, max_length + 1):
        batch: list = []
        _necklaces(rank, n, primitive_only, batch)
        emitted += len(batch)
        if emitted > cap:
            raise BudgetExceeded(f"more than {cap} classes up to length {max_length}")
        for letters in batch:
            yield CyclicWord(letters, rank)


def free_group_coding(rank: int) -> SubshiftGraph:
    """Graph on the ``2*rank`` letters with an edge ``x -> y`` unless ``y = x^-1``."""
    if rank < 2:
        raise ValueError("rank must be at least 2")
    letters = [letter_name(c) for c in range(2 * rank)]
    edges = [
        (letter_name(x), letter_name(y))
        for x in range(2 * rank)
        for y in range(2 * rank)
        if y != x ^ 1
    ]
    return build_subshift(letters, edges)


def class_to_cycle(coding: SubshiftGraph, c: CyclicWord) -> Cycle:
    if coding.n_states != 2 * c.rank:
        raise RankMismatch(f"coding has {coding.n_states} letters, class has rank {c.rank}")
    return Cycle.from_states(coding, [letter_name(x) for x in c.letters])


def cycle_to_class(c: Cycle) -> CyclicWord:
    rank = c.graph.n_states // 2
    letters = parse_letters("".join(c.state_sequence()))
    return CyclicWord(min_rotation(letters), rank)


def classes_csv(classes: Sequence[CyclicWord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["word", "length", "primitive_flag"])
    for c in classes:
        writer.writerow([str(c), c.length, int(c.is_primitive)])
    return buf.getvalue()
