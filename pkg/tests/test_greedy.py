from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from greedylab.core import ContractViolation, Vec
from greedylab.greedy import (GreedyQuery, canonical_greedy_set, enumerate_greedy_sets, greedy_masks,
                              greedy_sum, is_pseudo_greedy, is_tau_greedy, pseudo_greedy_as_difference,
                              pseudo_greedy_masks)

from strategies import distinct_moduli, vecs

X = Vec({1: 3, 2: -1, 3: 3})


def _q(x, m, tau=1.0):
    return GreedyQuery(x, m, tau)


def test_tau_greedy_examples():
    assert is_tau_greedy(_q(X, 1), {1})
    assert not is_tau_greedy(_q(X, 1), {2})
    assert is_tau_greedy(_q(X, 1, 0.3), {2})


def test_tau_greedy_contract():
    with pytest.raises(ContractViolation):
        is_tau_greedy(_q(X, 2), {1})
    with pytest.raises(ContractViolation):
        GreedyQuery(X, 1, 0.0)
    with pytest.raises(ContractViolation):
        GreedyQuery(X, 4)


def test_enumerate_examples():
    assert enumerate_greedy_sets(_q(X, 1)) == [(1,), (3,)]
    assert enumerate_greedy_sets(_q(X, 2)) == [(1, 3)]
    assert enumerate_greedy_sets(_q(X, 0)) == [()]


def test_enumeration_cap():
    from greedylab.core import EnumerationCapExceeded
    with pytest.raises(EnumerationCapExceeded):
        enumerate_greedy_sets(_q(Vec({}, dim=12), 6), cap=100)


def test_canonical_examples():
    assert canonical_greedy_set(_q(X, 1)) == (1,)
    assert canonical_greedy_set(_q(Vec({1: 1, 2: 2}), 1)) == (2,)
    assert canonical_greedy_set(_q(Vec({5: 7}, dim=6), 1)) == (5,)


def test_greedy_sum():
    assert greedy_sum(_q(X, 1), {3}) == Vec({3: 3})
    with pytest.raises(ContractViolation):
        greedy_sum(_q(X, 1), {2})


def test_pseudo_greedy_examples():
    x = Vec({1: 3, 2: 2, 3: 1})
    assert is_pseudo_greedy(x, {2})
    assert is_pseudo_greedy(Vec({1: 3, 2: 1, 3: 2}), {2})
    assert not is_pseudo_greedy(x, {1, 3})
    assert is_pseudo_greedy(x, ())
    assert pseudo_greedy_as_difference(x, {2}) == ((1,), (1, 2))
    assert pseudo_greedy_as_difference(x, {1, 3}) is None
    assert pseudo_greedy_as_difference(x, ()) == ((), ())


def test_difference_rejects_ties():
    with pytest.raises(ContractViolation):
        pseudo_greedy_as_difference(X, {2})


def _brute_greedy(x, m, tau):
    a = np.abs(x.dense())
    out = []
    for A in combinations(range(len(a)), m):
        rest = [a[i] for i in range(len(a)) if i not in A]
        lo = min((a[i] for i in A), default=np.inf)
        if lo >= tau * max(rest, default=0.0):
            out.append(tuple(i + 1 for i in A))
    return out


@given(vecs(), st.sampled_from([0.25, 0.5, 1.0]), st.data())
def test_enumeration_matches_brute_force(x, tau, data):
    m = data.draw(st.integers(0, x.dim))
    assert enumerate_greedy_sets(_q(x, m, tau)) == _brute_greedy(x, m, tau)


@given(vecs(), st.data())
def test_canonical_is_greedy_and_pseudo_greedy(x, data):
    m = data.draw(st.integers(0, x.dim))
    A = canonical_greedy_set(_q(x, m))
    sets = enumerate_greedy_sets(_q(x, m))
    assert A in sets
    assert all(is_pseudo_greedy(x, B) for B in sets)


@given(distinct_moduli, st.data())
def test_distinct_moduli_give_unique_greedy_set(mods_signs, data):
    mods, signs = mods_signs
    x = Vec({i + 1: s * v for i, (v, s) in enumerate(zip(mods, signs))}, dim=len(mods))
    m = data.draw(st.integers(0, x.dim))
    assert enumerate_greedy_sets(_q(x, m)) == [canonical_greedy_set(_q(x, m))]


@given(vecs(), st.data())
def test_smaller_tau_admits_more_sets(x, data):
    m = data.draw(st.integers(0, x.dim))
    hi = set(enumerate_greedy_sets(_q(x, m, 1.0)))
    mid = set(enumerate_greedy_sets(_q(x, m, 0.5)))
    lo = set(enumerate_greedy_sets(_q(x, m, 0.25)))
    assert hi <= mid <= lo


@given(vecs(), st.data())
def test_pseudo_greedy_masks_match_predicate(x, data):
    m = data.draw(st.integers(0, x.dim))
    fast = {tuple(np.flatnonzero(r) + 1) for r in pseudo_greedy_masks(np.abs(x.dense()), m)}
    slow = {A for A in combinations(range(1, x.dim + 1), m) if is_pseudo_greedy(x, A)}
    assert fast == slow


def test_greedy_masks_zero_order():
    assert greedy_masks(np.array([1.0, 2.0]), 0).shape == (1, 2)
