import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thurstonlab.errors import BudgetExceeded, IdentityElement, RankMismatch
from thurstonlab.flows import SuspensionFlow, period
from thurstonlab.sft import enumerate_cycles
from thurstonlab.thermo import topological_entropy
from thurstonlab.words import (
    CyclicWord,
    Word,
    canonical_class,
    class_to_cycle,
    classes_csv,
    cycle_to_class,
    enumerate_classes,
    free_group_coding,
    reduce,
)


def _scan_reduce(letters):
    """Repeatedly delete the first cancelling pair until none remain."""
    letters = list(letters)
    changed = True
    while changed:
        changed = False
        for k in range(len(letters) - 1):
            if letters[k] == letters[k + 1] ^ 1:
                del letters[k : k + 2]
                changed = True
                break
    return tuple(letters)


def _brute_classes(rank, n):
    """Cyclically reduced words of length n up to rotation, by exhaustive product."""
    out = set()
    for w in itertools.product(range(2 * rank), repeat=n):
        if all(w[k] != w[(k + 1) % n] ^ 1 for k in range(n)):
            out.add(min(w[k:] + w[:k] for k in range(n)))
    return out


def test_reduce_examples(rng):
    assert len(reduce(Word.parse("aA", 2))) == 0
    assert str(reduce(Word.parse("abBa", 2))) == "aa"
    for _ in range(500):
        w = Word(tuple(rng.integers(0, 4, size=20)), 2)
        assert reduce(w).letters == _scan_reduce(w.letters)


def test_canonical_class_examples(rng):
    assert canonical_class(Word.parse("baB", 2)) == canonical_class(Word.parse("a", 2))
    assert canonical_class(Word.parse("ab", 2)) == canonical_class(Word.parse("ba", 2))
    with pytest.raises(IdentityElement):
        canonical_class(Word.parse("abBA", 2))
    for _ in range(10_000):
        w = Word(tuple(rng.integers(0, 4, size=int(rng.integers(1, 13)))), 2)
        u = Word(tuple(rng.integers(0, 4, size=int(rng.integers(0, 13)))), 2)
        if not reduce(w).letters:
            continue
        c = canonical_class(w)
        assert canonical_class(u * w * u.inverse()) == c
        assert canonical_class(c.word()) == c


def test_enumerate_small_lengths():
    one = [str(c) for c in enumerate_classes(2, 1)]
    assert one == ["a", "A", "b", "B"]
    two = [c for c in enumerate_classes(2, 2) if c.length == 2]
    assert len(two) == 8
    assert {c.letters for c in two} == _brute_classes(2, 2)


@pytest.mark.parametrize("rank,n_max", [(2, 7), (3, 4)])
def test_enumerate_matches_brute_force(rank, n_max):
    by_len = {}
    for c in enumerate_classes(rank, n_max):
        by_len.setdefault(c.length, set()).add(c.letters)
    for n in range(1, n_max + 1):
        assert by_len[n] == _brute_classes(rank, n)


def test_enumerate_order_and_primitive_filter():
    classes = list(enumerate_classes(2, 8))
    keys = [(c.length, c.letters) for c in classes]
    assert keys == sorted(keys)
    prim = set(enumerate_classes(2, 8, primitive_only=True))
    assert prim == {c for c in classes if c.is_primitive}
    for c in prim:
        for n in range(2, 8 // c.length + 1):
            assert c.power(n) not in prim


def test_count_equals_cycles_of_coding():
    coding = free_group_coding(2)
    counts = Counter(c.length for c in enumerate_classes(2, 10))
    walks = Counter(len(c) for c in enumerate_cycles(coding, 10))
    assert counts == walks


def test_class_growth_rate():
    counts = Counter(c.length for c in enumerate_classes(2, 14))
    n = np.arange(8, 15)
    cum = np.cumsum([counts[k] for k in range(1, 15)])[7:]
    # prime-orbit growth: N(n) ~ e^{hn}/n, so log(n N) is the linear quantity
    slope = np.polyfit(n, np.log(n * cum), 1)[0]
    assert abs(slope / math.log(3) - 1) <= 0.03


def test_coding_examples():
    g2 = free_group_coding(2)
    assert g2.n_states == 4 and g2.n_edges == 12
    assert topological_entropy(g2) == pytest.approx(math.log(3), abs=1e-12)
    assert topological_entropy(free_group_coding(3)) == pytest.approx(math.log(5), abs=1e-12)


def test_coding_bijection():
    coding = free_group_coding(2)
    classes = list(enumerate_classes(2, 6))
    cycles = {c.canonical() for c in enumerate_cycles(coding, 6)}
    images = {class_to_cycle(coding, c).canonical() for c in classes}
    assert images == cycles and len(images) == len(classes)
    assert {cycle_to_class(c) for c in cycles} == set(classes)


def test_class_to_cycle_examples(rng):
    coding = free_group_coding(2)
    a = class_to_cycle(coding, canonical_class(Word.parse("a", 2)))
    assert len(a) == 1 and a.state_sequence() == ["a"]
    ab = class_to_cycle(coding, canonical_class(Word.parse("ab", 2)))
    assert ab.state_sequence() == ["a", "b"]
    flow = SuspensionFlow(coding, coding.constant(1.0))
    tens = [c for c in enumerate_classes(2, 10) if c.length == 10]
    for k in rng.choice(len(tens), 20, replace=False):
        assert period(flow, class_to_cycle(coding, tens[k])) == 10
    with pytest.raises(RankMismatch):
        class_to_cycle(free_group_coding(3), canonical_class(Word.parse("ab", 2)))


def test_budget():
    with pytest.raises(BudgetExceeded):
        list(enumerate_classes(2, 10, cap=1000))


def test_csv_rows():
    text = classes_csv(list(enumerate_classes(2, 2)))
    lines = text.strip().splitlines()
    assert lines[0] == "word,length,primitive_flag"
    assert "aa,2,0" in lines and "ab,2,1" in lines


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=15), st.integers(1, 4))
def test_root_and_power(letters, n):
    w = Word(tuple(letters), 3)
    if not reduce(w).letters:
        return
    c = canonical_class(w)
    root, k = c.root()
    assert root.power(k) == c
    assert root.is_primitive
    assert canonical_class((c.word()) ** n).root() == (root, k * n)
