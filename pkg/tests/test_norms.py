import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from greedylab.core import ContractViolation, Vec, partial_sum, project
from greedylab.norms import make_engine, norm, p_convexity_audit

from strategies import vecs

ISUP = make_engine({"norm": "interval_sup"})


def brute_interval_sup(x: np.ndarray) -> float:
    """Independent O(d^2) evaluation over all intervals N <= M."""
    best = 0.0
    for i in range(len(x)):
        for j in range(i, len(x)):
            best = max(best, abs(x[i:j + 1].sum()))
    return best


def test_counterexample_norm_values():
    assert norm(ISUP, Vec({1: 3, 2: -1, 3: 3})) == 5.0
    assert norm(ISUP, Vec({1: 3, 3: 3})) == 6.0


def test_lp_examples():
    assert norm(make_engine({"norm": "lp", "q": 2}), Vec({1: 3, 2: 4})) == 5.0
    assert norm(make_engine({"norm": "lp", "q": 1}), Vec({})) == 0.0


def test_weights_extend_by_last_value():
    e = make_engine({"norm": "weighted_lp", "q": 1, "weights": [1, 0.5, 0.25]})
    assert e.norm(Vec({5: 4.0})) == pytest.approx(1.0)
    assert e.weight_vector(5).tolist() == [1, 0.5, 0.25, 0.25, 0.25]


def test_engine_config_errors():
    with pytest.raises(ValueError):
        make_engine({"norm": "lorentz"})
    with pytest.raises(ValueError):
        make_engine({"norm": "weighted_lp", "q": 1})
    with pytest.raises(ValueError):
        make_engine({"norm": "lp", "q": 1, "extra": 2})
    with pytest.raises(ContractViolation):
        make_engine({"norm": "lp", "q": -1})


def test_p_exp():
    assert make_engine({"norm": "lp", "q": 0.5}).p_exp == 0.5
    assert make_engine({"norm": "lp", "q": 3}).p_exp == 1.0
    assert ISUP.p_exp == 1.0


def test_p_convexity_audit_examples():
    lp1 = make_engine({"norm": "lp", "q": 1})
    assert p_convexity_audit(lp1, [(Vec({1: 1}), Vec({1: -2, 2: 1}))]) <= 1.0
    lph = make_engine({"norm": "lp", "q": 0.5})
    assert p_convexity_audit(lph, [(Vec({1: 2}), Vec({2: 3}))]) == pytest.approx(1.0, abs=1e-12)
    assert p_convexity_audit(ISUP, [(Vec({1: 1}), Vec({2: 1}))]) == 1.0
    with pytest.raises(ContractViolation):
        p_convexity_audit(lp1, [])


@given(vecs(max_dim=8))
def test_interval_sup_matches_brute_force(x):
    assert ISUP.norm(x) == pytest.approx(brute_interval_sup(x.dense()), abs=1e-12)


@given(vecs(), st.floats(-4, 4, allow_nan=False))
def test_homogeneous_and_definite(engine, x, lam):
    n = engine.norm(x)
    assert n >= 0
    assert (n == 0) == (not x.support)
    assert engine.norm(x * lam) == pytest.approx(abs(lam) * n, rel=1e-9, abs=1e-12)


@given(st.integers(1, 6).flatmap(lambda d: st.tuples(vecs(dim=d), vecs(dim=d))))
def test_p_triangle(engine, xy):
    x, y = xy
    assert p_convexity_audit(engine, [(x, y)]) <= 1 + 1e-9


@given(vecs())
def test_interval_sup_dominates_sup(x):
    assert ISUP.norm(x) >= x.sup_abs() - 1e-12


@given(vecs(), st.integers(0, 6), st.integers(0, 6))
def test_interval_sup_bimonotone(x, n, m):
    block = partial_sum(x, n + m) - partial_sum(x, n)
    assert ISUP.norm(block) <= ISUP.norm(x) + 1e-12


@given(vecs(), st.integers(1, 6))
def test_lp_suppression_unconditional(x, k):
    for q in (0.5, 1, 2):
        e = make_engine({"norm": "lp", "q": q})
        rest = [n for n in x.support if n != k]
        assert e.norm(project(x, rest)) <= e.norm(x) + 1e-12


def test_batched_and_single_evaluation_agree(engine):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 5))
    batch = engine.norm(X)
    for row, b in zip(X, batch):
        assert engine.norm(Vec.from_dense(row)) == pytest.approx(b, rel=1e-12)
    assert engine.norm(X.reshape(4, 5, 5)).shape == (4, 5)
