import numpy as np
import pytest
from hypothesis import given, strategies as st

from greedylab.core import (ContractViolation, Interval, Vec, index_set, indicator, partial_sum,
                            project, sign_vector, signed_indicators, subset_masks)

from strategies import vec_and_set, vecs

X = Vec({1: 3, 2: -1, 3: 3})


def test_indicator_examples():
    assert indicator({1, 3}).coeffs == {1: 1.0, 3: 1.0}
    assert indicator(set()) == Vec({})
    assert indicator({2}, {2: -1}).coeffs == {2: -1.0}


def test_indicator_needs_signs_on_all_of_A():
    with pytest.raises(ContractViolation):
        indicator({1, 2}, {1: 1})


def test_project_examples():
    assert project(X, {1, 3}) == Vec({1: 3, 3: 3})
    assert project(X, X.support) == X
    assert project(X, ()) == Vec({})


def test_partial_sum_examples():
    assert partial_sum(X, 2) == Vec({1: 3, 2: -1})
    assert partial_sum(X, 0) == Vec({})
    assert partial_sum(X, 7) == X


def test_sign_vector_examples():
    assert sign_vector(Vec({1: -2}), {1, 2}) == {1: -1, 2: 1}
    assert sign_vector(Vec({3: 5}), {3}) == {3: 1}
    assert sign_vector(Vec({}), {1}) == {1: 1}


def test_vec_drops_zeros_and_checks_indices():
    v = Vec({1: 0.0, 2: 4.0}, dim=5)
    assert v.support == (2,)
    assert v.dim == 5
    with pytest.raises(ContractViolation):
        Vec({0: 1.0})
    with pytest.raises(ContractViolation):
        Vec({4: 1.0}, dim=3)


def test_json_round_trip():
    v = Vec.from_json('{"1": 3, "2": -1.5}')
    assert v.to_json() == {"1": 3, "2": -1.5}
    with pytest.raises(ValueError):
        Vec.from_json('[1, 2]')
    with pytest.raises(ValueError):
        Vec.from_json('{"x": 1}')


def test_dense_is_read_only():
    d = X.dense()
    assert d.tolist() == [3.0, -1.0, 3.0]
    with pytest.raises(ValueError):
        d[0] = 1.0


def test_interval_and_index_set():
    assert Interval(3, 2).indices == (3, 4)
    assert Interval(1, 0).indices == ()
    assert index_set([3, 1, 3]) == (1, 3)
    with pytest.raises(ContractViolation):
        index_set([0])


def test_signed_indicator_rows_cover_all_sign_patterns():
    rows, masks = signed_indicators(3, 2)
    assert len(rows) == 3 * 4
    assert {tuple(r) for r in rows} == {
        tuple(s1 * np.eye(3)[i] + s2 * np.eye(3)[j])
        for i in range(3) for j in range(i + 1, 3) for s1 in (1, -1) for s2 in (1, -1)}
    assert subset_masks(4, 2).sum(axis=1).tolist() == [2] * 6


@given(vec_and_set())
def test_project_idempotent(xa):
    x, A = xa
    assert project(project(x, A), A) == project(x, A)


@given(vec_and_set())
def test_projection_splits_x(xa):
    x, A = xa
    rest = set(x.support) - set(A)
    assert project(x, A) + project(x, rest) == x


@given(st.sets(st.integers(1, 8)), st.sets(st.integers(1, 8)))
def test_indicator_additive_on_disjoint_sets(A, B):
    B = B - A
    assert indicator(A | B) == indicator(A) + indicator(B)


@given(vecs(), st.integers(0, 8))
def test_partial_sum_is_projection(x, m):
    assert partial_sum(x, m) == project(x, range(1, m + 1))
