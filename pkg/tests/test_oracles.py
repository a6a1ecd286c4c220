import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from greedylab.core import ContractViolation, Vec
from greedylab.norms import make_engine
from greedylab.oracles import (A_p, D_con_m, D_m, ErrorBudget, PConstants, constant_residuals,
                               eta_p, free_residuals, sigma_con_m, sigma_m, sigma_tilde_m)

from strategies import vecs

LP1 = make_engine({"norm": "lp", "q": 1})
LP2 = make_engine({"norm": "lp", "q": 2})
ISUP = make_engine({"norm": "interval_sup"})


def test_sigma_examples():
    x = Vec({1: 3, 2: 1})
    assert sigma_m(LP1, x, 1) == 1.0
    assert sigma_tilde_m(LP1, x, 1) == 1.0
    assert sigma_m(LP1, x, 2) == 0.0
    assert sigma_m(ISUP, Vec({1: 3, 2: -1, 3: 3}), 0) == 5.0
    assert sigma_tilde_m(ISUP, Vec({1: 3, 2: -1, 3: 3}), 1) == 3.0


def test_sigma_con_examples():
    assert sigma_con_m(LP1, Vec({1: 1, 3: 1}), 2) == 1.0
    assert sigma_con_m(LP1, Vec({1: 1, 3: 1}), 0) == 2.0
    assert sigma_con_m(ISUP, Vec({2: 1, 3: -4, 4: 2}), 3) == 0.0


def test_D_examples():
    assert D_m(LP2, Vec({1: 1, 2: 1}), 2) == pytest.approx(0.0, abs=1e-12)
    assert D_m(LP1, Vec({1: 2, 2: 1}), 0) == 3.0
    assert D_m(LP1, Vec({1: 2, 2: 1}), 2) <= 1.0 + 1e-9
    assert D_con_m(LP1, Vec({1: 1, 2: 1}), 2) == pytest.approx(0.0, abs=1e-12)
    assert D_con_m(LP1, Vec({1: 1, 3: 1}), 0) == 2.0


def test_D_con_of_split_pair_is_two():
    # every length-2 interval and every lambda leave at least 2 in l1
    x = Vec({1: 1, 3: 1})
    assert D_con_m(LP1, x, 2) == pytest.approx(2.0, abs=1e-12)
    lams = np.linspace(-3, 3, 60001)
    brute = min(LP1.norm(x.dense(4)[None, :] - lams[:, None] * mask).min()
                for mask in ([1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]))
    assert brute == pytest.approx(2.0, abs=1e-9)


def test_D_con_is_not_monotone_in_m():
    e1 = Vec({1: 1.0}, dim=6)
    assert D_con_m(LP1, e1, 1) == 0.0
    assert D_con_m(LP1, e1, 2) == 1.0


def test_p_constants():
    assert A_p(1.0) == 1.0
    assert A_p(0.5) == pytest.approx((math.sqrt(2) - 1) ** -2)
    c = PConstants(0.5)
    assert c.B_p == pytest.approx(4 * c.A_p)
    with pytest.raises(ContractViolation):
        PConstants(1.5)
    with pytest.raises(ContractViolation):
        ErrorBudget(lambda_grid=2)


def _eta_brute(p, u, n=10**6):
    t = (np.arange(n) + 0.5) / n
    s = t / (A_p(p) * u)
    vals = (1 - t**p) ** (-1 / p) * (1 - (1 + s) ** (-p)) ** (-1 / p)
    return vals.min()


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("u", [0.5, 1.0, 2.0, 5.0])
def test_eta_matches_brute_grid(p, u):
    assert eta_p(p, u) == pytest.approx(_eta_brute(p, u), rel=1e-6)
    assert eta_p(p, u) >= 1.0


def test_eta_nondecreasing_in_u():
    vals = [eta_p(0.5, u) for u in (0.25, 0.5, 1, 2, 4, 8)]
    assert all(a <= b * (1 + 1e-9) for a, b in zip(vals, vals[1:]))


def test_eta_domain():
    with pytest.raises(ContractViolation):
        eta_p(1.0, 1.0)
    with pytest.raises(ContractViolation):
        eta_p(0.5, 0.0)


def _lp_interval_sup_residual(x, free):
    """min over free coordinates of max prefix - min prefix, as a linear program.

    Variables: a (free coords), hi, lo. Prefix sums P_k = sum_{j<=k} (x_j + a_j).
    """
    d = len(x)
    fidx = np.flatnonzero(free)
    nv = len(fidx) + 2
    A_ub, b_ub = [], []
    for k in range(1, d + 1):
        coef = np.zeros(nv)
        coef[:len(fidx)] = fidx < k
        base = x[:k].sum()
        row = coef.copy()
        row[-2] = -1.0              # P_k - hi <= 0
        A_ub.append(row)
        b_ub.append(-base)
        row = -coef
        row[-1] = 1.0               # lo - P_k <= 0
        A_ub.append(row)
        b_ub.append(base)
    c = np.zeros(nv)
    c[-2], c[-1] = 1.0, -1.0
    bounds = [(None, None)] * len(fidx) + [(0, None), (None, 0)]
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun


@given(vecs(min_dim=2, max_dim=7), st.data())
def test_interval_sup_closed_form_matches_lp(x, data):
    d = x.dim
    free = np.array(data.draw(st.lists(st.booleans(), min_size=d, max_size=d)))
    exact = free_residuals(ISUP, x.dense()[None, :], free[None, :])[0]
    assert exact == pytest.approx(_lp_interval_sup_residual(x.dense(), free), abs=1e-7)


@pytest.mark.parametrize("cfg", [{"norm": "lp", "q": 1}, {"norm": "lp", "q": 2},
                                 {"norm": "sup"},
                                 {"norm": "weighted_lp", "q": 1, "weights": [2, 1, 0.5]}])
def test_descent_agrees_with_projection(cfg):
    e = make_engine(cfg)
    rng = np.random.default_rng(7)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        x = np.round(rng.uniform(-3, 3, size=d), 3)
        free = rng.random(d) < 0.5
        descent = free_residuals(e, x[None], free[None], method="descent")[0]
        assert descent == pytest.approx(e.norm(np.where(free, 0.0, x)), abs=1e-8)


def test_constant_residuals_argmin():
    x = np.array([2.0, 1.0, 0.0])
    masks = np.array([[1, 1, 0], [1, 0, 0]], dtype=bool)
    vals, lam = constant_residuals(LP1, x, masks, return_argmin=True)
    assert vals.tolist() == [1.0, 1.0]
    for v, l, mk in zip(vals, lam, masks):
        assert LP1.norm(x - l * mk) == pytest.approx(v)


@given(vecs(max_dim=5), st.integers(0, 2))
def test_error_functional_chain(engine, x, m):
    x = x.with_dim(x.dim + m)
    s = sigma_m(engine, x, m)
    st_ = sigma_tilde_m(engine, x, m)
    sc = sigma_con_m(engine, x, m)
    dm = D_m(engine, x, m)
    dc = D_con_m(engine, x, m)
    nx = engine.norm(x)
    tol = 1e-9 * max(1.0, nx)
    assert s <= st_ + tol and s <= sc + tol and s <= dm + tol
    assert sc <= dc + tol and dm <= dc + tol
    for v in (s, st_, sc, dm, dc):
        assert v <= nx + tol


@given(vecs(max_dim=6))
def test_lambda_bracket(engine, x):
    if not x.support:
        return
    xd = x.dense()
    R = 2 * x.sup_abs()
    mask = np.abs(xd) > 0
    lams = np.array([R, 1.5 * R, 3 * R])
    vals = engine.norm(xd[None] - lams[:, None] * mask)
    assert np.all(np.diff(vals) >= -1e-12)
    vals = engine.norm(xd[None] + lams[:, None] * mask)
    assert np.all(np.diff(vals) >= -1e-12)
