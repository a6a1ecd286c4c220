"""Corpus-supremum estimators for the named basis constants.

Each estimator walks the family of instances its defining inequality
quantifies over (restricted to the corpus or to a coefficient grid), and
returns the largest ratio together with the instance achieving it. The value
is a lower bound for the true constant.

Ratios with a zero denominator count as ``+inf`` when the numerator is
nonzero and are skipped when both vanish. Ties keep the first instance in
enumeration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (ContractViolation, Vec, check_cap, mask_to_set, signed_indicators,
                   subset_masks)
from .corpus import UNIT_GRID, Corpus, grid_family
from .greedy import greedy_masks
from .norms import NormEngine
from .oracles import DEFAULT_BUDGET, ErrorBudget, D_con_m, sigma_con_m

ZERO_TOL = 1e-12

NAMES = ("Kb", "Ksu", "Delta_d", "Delta_sd", "C_ell_tau", "C_tq", "C_g_con_tau",
         "P_g_con_tau", "PropA_tau", "QGLC", "NearUnc_phi_t", "C_sqs", "ConsecUnc")
TAU_NAMES = ("C_ell_tau", "C_g_con_tau", "P_g_con_tau", "PropA_tau", "NearUnc_phi_t")


@dataclass
class ConstantEstimate:
    name: str
    value: float
    witness: dict | None
    tau_or_t: float | None = None
    instances: int = 0

    def to_row(self) -> dict:
        return {"name": self.name,
                "tau": self.tau_or_t,
                "value": _json_float(self.value),
                "instances": self.instances,
                "witness": self.witness}

    def __str__(self):
        tau = "" if self.tau_or_t is None else f"[{self.tau_or_t:g}]"
        return f"{self.name}{tau} >= {self.value:.12g} over {self.instances} instances"


def _json_float(v: float):
    if math.isinf(v):
        return "inf"
    return float(v)


class _Best:
    """Running maximum of num/den with the first maximizing witness."""

    def __init__(self):
        self.value = -math.inf
        self.witness = None
        self.count = 0

    def offer(self, num, den, scale, make_witness) -> None:
        num = np.atleast_1d(np.asarray(num, dtype=float))
        den = np.atleast_1d(np.asarray(den, dtype=float))
        num, den = np.broadcast_arrays(num, den)
        scale = np.broadcast_to(np.asarray(scale, dtype=float), num.shape)
        tiny = ZERO_TOL * np.maximum(scale, 1.0)
        zero_den = den <= tiny
        skip = zero_den & (num <= tiny)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zero_den, np.inf, num / np.where(zero_den, 1.0, den))
        ratio = np.where(skip, -np.inf, ratio)
        self.count += int((~skip).sum())
        if not ratio.size:
            return
        k = int(np.argmax(ratio))
        if ratio.flat[k] > self.value:
            self.value = float(ratio.flat[k])
            self.witness = make_witness(np.unravel_index(k, ratio.shape))

    def result(self, name, tau=None) -> ConstantEstimate:
        value = self.value if self.witness is not None else 0.0
        return ConstantEstimate(name, value, self.witness, tau, self.count)


def _sets(mask) -> list[int]:
    return list(mask_to_set(mask))


def _signs(row, A) -> list[int]:
    return [1 if row[n - 1] > 0 else -1 for n in A]


def _support_masks(x: np.ndarray) -> np.ndarray:
    """Masks of all subsets of supp(x), as full-window masks."""
    cols = np.flatnonzero(x)
    s = len(cols)
    bits = (np.arange(2**s)[:, None] >> np.arange(s)) & 1
    out = np.zeros((2**s, len(x)), dtype=bool)
    out[:, cols] = bits.astype(bool)
    return out


def _interval_list(d: int):
    """(start, length) for every interval inside {1..d}, length 0 first."""
    yield 1, 0
    for length in range(1, d + 1):
        for start in range(1, d - length + 2):
            yield start, length


# -- corpus families ------------------------------------------------------------

def est_Kb(engine: NormEngine, corpus: Corpus) -> ConstantEstimate:
    best = _Best()
    for x in corpus:
        xd = x.dense()
        d = len(xd)
        rows = np.where(np.arange(d)[None, :] < np.arange(d + 1)[:, None], xd, 0.0)
        best.offer(engine.norm(rows), engine.norm(xd), engine.norm(xd),
                   lambda k, x=x: {"x": x.to_json(), "dim": x.dim, "m": int(k[0])})
    return best.result("Kb")


def est_Ksu(engine: NormEngine, corpus: Corpus) -> ConstantEstimate:
    best = _Best()
    for x in corpus:
        xd = x.dense()
        masks = _support_masks(xd)
        nx = engine.norm(xd)
        best.offer(engine.norm(np.where(masks, 0.0, xd)), nx, nx,
                   lambda k, x=x, masks=masks: {"x": x.to_json(), "dim": x.dim,
                                                "A": _sets(masks[k[0]])})
    return best.result("Ksu")


def est_consec_unc(engine: NormEngine, corpus: Corpus) -> ConstantEstimate:
    best = _Best()
    for x in corpus:
        xd = x.dense()
        ivs = list(_interval_list(len(xd)))
        masks = np.zeros((len(ivs), len(xd)), dtype=bool)
        for i, (s, length) in enumerate(ivs):
            masks[i, s - 1:s - 1 + length] = True
        nx = engine.norm(xd)
        best.offer(engine.norm(np.where(masks, 0.0, xd)), nx, nx,
                   lambda k, x=x, ivs=ivs: {"x": x.to_json(), "dim": x.dim,
                                            "I": list(range(ivs[k[0]][0], sum(ivs[k[0]])))})
    return best.result("ConsecUnc")


def _greedy_family(corpus: Corpus, tau: float, m_min: int = 0):
    """Yield ``(x, xd, m, masks)`` for every corpus vector and order m."""
    for x in corpus:
        xd = x.dense()
        ax = np.abs(xd)
        for m in range(m_min, len(xd) + 1):
            masks = greedy_masks(ax, m, tau)
            if len(masks):
                yield x, xd, m, masks


def _tau_ok(tau: float) -> None:
    if not 0.0 < tau <= 1.0:
        raise ContractViolation(f"tau must lie in (0, 1], got {tau}")


def est_suppression_qg(engine: NormEngine, corpus: Corpus, tau: float = 1.0) -> ConstantEstimate:
    _tau_ok(tau)
    best = _Best()
    for x, xd, m, masks in _greedy_family(corpus, tau):
        nx = engine.norm(xd)
        best.offer(engine.norm(np.where(masks, 0.0, xd)), nx, nx,
                   lambda k, x=x, m=m, masks=masks: {"x": x.to_json(), "dim": x.dim, "m": m,
                                                     "A": _sets(masks[k[0]])})
    return best.result("C_ell_tau", tau)


def truncation_values(engine: NormEngine, xd: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """``min_{n in A} |x_n| * ||1_{eps(x), A}||`` for each mask."""
    ax = np.abs(xd)
    sg = np.where(xd < 0, -1.0, 1.0)
    lo = np.where(masks, ax, np.inf).min(axis=1)
    return lo * engine.norm(np.where(masks, sg, 0.0))


def est_truncation_qg(engine: NormEngine, corpus: Corpus) -> ConstantEstimate:
    best = _Best()
    for x, xd, m, masks in _greedy_family(corpus, 1.0, m_min=1):
        nx = engine.norm(xd)
        best.offer(truncation_values(engine, xd, masks), nx, nx,
                   lambda k, x=x, m=m, masks=masks: {"x": x.to_json(), "dim": x.dim, "m": m,
                                                     "A": _sets(masks[k[0]])})
    return best.result("C_tq")


def est_consecutive_greedy(engine: NormEngine, corpus: Corpus, tau: float = 1.0,
                           budget: ErrorBudget = DEFAULT_BUDGET) -> ConstantEstimate:
    _tau_ok(tau)
    best = _Best()
    for x, xd, m, masks in _greedy_family(corpus, tau):
        den = sigma_con_m(engine, x, m, budget)
        best.offer(engine.norm(np.where(masks, 0.0, xd)), den, engine.norm(xd),
                   lambda k, x=x, m=m, masks=masks: {"x": x.to_json(), "dim": x.dim, "m": m,
                                                     "A": _sets(masks[k[0]])})
    return best.result("C_g_con_tau", tau)


def est_cgpcc(engine: NormEngine, corpus: Corpus, tau: float = 1.0,
              budget: ErrorBudget = DEFAULT_BUDGET) -> ConstantEstimate:
    _tau_ok(tau)
    best = _Best()
    for x, xd, m, masks in _greedy_family(corpus, tau):
        den = D_con_m(engine, x, m, budget)
        best.offer(engine.norm(np.where(masks, 0.0, xd)), den, engine.norm(xd),
                   lambda k, x=x, m=m, masks=masks: {"x": x.to_json(), "dim": x.dim, "m": m,
                                                     "A": _sets(masks[k[0]])})
    return best.result("P_g_con_tau", tau)


# -- indicator and grid families ---------------------------------------------

def all_signed_indicators(d: int, max_card: int, cols=None, sign_budget: int | None = None,
                          signed: bool = True):
    """Dense rows of ``1_{eps,A}`` for all ``A`` inside ``cols`` (default: the
    whole window) with ``|A| <= max_card``.

    Returns ``(rows, bits, cards)`` where ``bits`` encodes A as a bitmask over
    the window.
    """
    cols = np.arange(d) if cols is None else np.asarray(cols, dtype=int)
    r = len(cols)
    kmax = min(max_card, r)
    size = sum(math.comb(r, k) * (2**k if signed else 1) for k in range(kmax + 1))
    check_cap("signed indicators", size, sign_budget)
    rows, bits, cards = [], [], []
    weights = (1 << cols.astype(np.int64))
    for k in range(kmax + 1):
        if signed:
            local, masks = signed_indicators(r, k)
        else:
            masks = subset_masks(r, k)
            local = masks.astype(float)
        full = np.zeros((len(local), d))
        full[:, cols] = local
        rows.append(full)
        bits.append((masks.astype(np.int64) * weights).sum(axis=1))
        cards.append(np.full(len(local), k))
    return np.vstack(rows), np.concatenate(bits), np.concatenate(cards)


def est_superdemocracy(engine: NormEngine, dim: int, max_card: int | None = None,
                       signed: bool = True, sign_budget: int | None = 10**5) -> ConstantEstimate:
    """``max ||1_{eps,A}|| / ||1_{delta,B}||`` over ``|A| <= |B| <= max_card``."""
    max_card = dim if max_card is None else min(max_card, dim)
    rows, bits, cards = all_signed_indicators(dim, max_card, sign_budget=sign_budget,
                                              signed=signed)
    norms = engine.norm(rows)
    best = _Best()
    # for |A| <= |B| the worst pair is the largest A-norm of any card <= |B|
    # against the smallest B-norm of card |B|
    order_a = []
    for k in range(max_card + 1):
        idx = np.flatnonzero(cards == k)
        order_a.append(idx[int(np.argmax(norms[idx]))])
    for kb in range(1, max_card + 1):
        cand = [order_a[ka] for ka in range(kb + 1)]
        ia = cand[int(np.argmax(norms[cand]))]
        idx_b = np.flatnonzero(cards == kb)
        ib = idx_b[int(np.argmin(norms[idx_b]))]
        n_pairs = sum(int((cards == ka).sum()) for ka in range(kb + 1)) * len(idx_b)

        def witness(_k, ia=ia, ib=ib):
            A = _bits_to_set(bits[ia])
            B = _bits_to_set(bits[ib])
            return {"dim": dim, "A": A, "eps": _signs(rows[ia], A),
                    "B": B, "delta": _signs(rows[ib], B)}

        before = best.count
        best.offer(norms[ia], norms[ib], 1.0, witness)
        best.count = before + n_pairs
    return best.result("Delta_sd" if signed else "Delta_d")


def _bits_to_set(b) -> list[int]:
    b = int(b)
    out, n = [], 1
    while b:
        if b & 1:
            out.append(n)
        b >>= 1
        n += 1
    return out


DEFAULT_GRID = UNIT_GRID


def _complement(d: int, supp) -> np.ndarray:
    s = set(n - 1 for n in supp)
    return np.array([i for i in range(d) if i not in s], dtype=int)


def propA_block(engine: NormEngine, X: np.ndarray, ind_rows: np.ndarray, ind_bits: np.ndarray,
                ind_cards: np.ndarray, tau: float, disjoint: bool = True):
    """Ratios ``||tau x + 1_{eps,A}|| / ||x + 1_{delta,B}||`` for every x in X and
    every admissible pair of indicator rows; returns (num, den, valid) arrays
    shaped (nx, nA, nB) after broadcasting."""
    num = engine.norm(tau * X[:, None, :] + ind_rows[None, :, :])
    den = engine.norm(X[:, None, :] + ind_rows[None, :, :])
    valid = ind_cards[:, None] <= ind_cards[None, :]
    if disjoint:
        valid &= (ind_bits[:, None] & ind_bits[None, :]) == 0
    return num[:, :, None], den[:, None, :], valid[None, :, :]


def est_propA(engine: NormEngine, dim: int, tau: float = 1.0, coeff_grid=DEFAULT_GRID,
              max_support: int = 3, max_card: int | None = None,
              sign_budget: int | None = 10**5) -> ConstantEstimate:
    """Property (A, tau): x on a grid with ``||x||_inf <= 1/tau``; supp(x), A, B
    pairwise disjoint, ``|A| <= |B|``, all signs."""
    _tau_ok(tau)
    max_card = dim if max_card is None else max_card
    best = _Best()
    for supp, X in grid_family(dim, max_support, coeff_grid, scale=1.0 / tau):
        free = _complement(dim, supp)
        rows, bits, cards = all_signed_indicators(dim, max_card, free, sign_budget)
        num, den, valid = propA_block(engine, X, rows, bits, cards, tau)
        num, den = np.broadcast_arrays(num, den)
        scale = engine.norm(X)[:, None, None] + 1.0
        num = np.where(valid, num, 0.0)
        den = np.where(valid, den, 0.0)

        def witness(k, X=X, rows=rows, bits=bits):
            A, B = _bits_to_set(bits[k[1]]), _bits_to_set(bits[k[2]])
            return {"dim": dim, "x": Vec.from_dense(X[k[0]]).to_json(), "A": A,
                    "eps": _signs(rows[k[1]], A), "B": B, "delta": _signs(rows[k[2]], B),
                    "tau": tau}

        best.offer(num, den, scale, witness)
    return best.result("PropA_tau", tau)


def est_qglc(engine: NormEngine, dim: int, coeff_grid=DEFAULT_GRID, max_support: int = 3,
             max_card: int | None = None, sign_budget: int | None = 10**5) -> ConstantEstimate:
    """``||1_{eps,A}|| / ||x + 1_{eps,A}||`` for ``||x||_inf <= 1``, supp(x) and A disjoint."""
    max_card = dim if max_card is None else max_card
    best = _Best()
    for supp, X in grid_family(dim, max_support, coeff_grid):
        free = _complement(dim, supp)
        rows, bits, _ = all_signed_indicators(dim, max_card, free, sign_budget)
        num = engine.norm(rows)[None, :]
        den = engine.norm(X[:, None, :] + rows[None, :, :])

        def witness(k, X=X, rows=rows, bits=bits):
            A = _bits_to_set(bits[k[1]])
            return {"dim": dim, "x": Vec.from_dense(X[k[0]]).to_json(), "A": A,
                    "eps": _signs(rows[k[1]], A)}

        best.offer(num, den, den + 1.0, witness)
    return best.result("QGLC")


def est_near_unc_phi(engine: NormEngine, dim: int, t: float, coeff_grid=DEFAULT_GRID,
                     max_support: int = 3) -> ConstantEstimate:
    """``||P_A x|| / ||x||`` for ``||x||_inf <= 1`` and ``min_{A} |x_n| >= t``."""
    _tau_ok(t)
    best = _Best()
    for supp, X in grid_family(dim, max_support, coeff_grid):
        if not supp:
            continue
        cols = [n - 1 for n in supp]
        k = len(cols)
        sub = ((np.arange(1, 2**k)[:, None] >> np.arange(k)) & 1).astype(bool)
        masks = np.zeros((len(sub), dim), dtype=bool)
        masks[:, cols] = sub
        big = np.abs(X) >= t
        # A must sit inside {|x_n| >= t}
        ok = ~(masks[None, :, :] & ~big[:, None, :]).any(axis=2)
        num = engine.norm(np.where(masks[None, :, :], X[:, None, :], 0.0))
        num = np.where(ok, num, 0.0)
        den = engine.norm(X)[:, None]

        def witness(kk, X=X, masks=masks):
            return {"dim": dim, "x": Vec.from_dense(X[kk[0]]).to_json(),
                    "A": _sets(masks[kk[1]]), "t": t}

        best.offer(num, den, den, witness)
    return best.result("NearUnc_phi_t", t)


SQS_SCALE = 2.0


def est_sqs(engine: NormEngine, dim: int, coeff_grid=DEFAULT_GRID, max_support: int = 3,
            sign_budget: int | None = 10**5) -> ConstantEstimate:
    """``||1_{eps,A}|| / ||x||`` over x with at least |A| coefficients of modulus >= 1.

    x ranges over the grid scaled by 2 so that both sides of the threshold 1
    are represented.
    """
    rows, bits, cards = all_signed_indicators(dim, dim, sign_budget=sign_budget)
    norms = engine.norm(rows)
    # best indicator of cardinality <= k, first in enumeration order on ties
    top = []
    for k in range(dim + 1):
        idx = np.flatnonzero(cards <= k)
        top.append(idx[int(np.argmax(norms[idx]))])
    best = _Best()
    for supp, X in grid_family(dim, max_support, coeff_grid, scale=SQS_SCALE):
        if not supp:
            continue
        counts = (np.abs(X) >= 1.0).sum(axis=1)
        pick = np.array([top[c] for c in counts])
        num = norms[pick]
        den = engine.norm(X)

        def witness(kk, X=X, pick=pick):
            i = pick[kk[0]]
            A = _bits_to_set(bits[i])
            return {"dim": dim, "x": Vec.from_dense(X[kk[0]]).to_json(), "A": A,
                    "eps": _signs(rows[i], A)}

        best.offer(num, den, den, witness)
    return best.result("C_sqs")


# -- witness re-evaluation ------------------------------------------------------------

def _indicator_dense(d: int, A, eps=None) -> np.ndarray:
    out = np.zeros(d)
    for i, n in enumerate(A):
        out[n - 1] = 1.0 if eps is None else float(eps[i])
    return out


def evaluate_witness(engine: NormEngine, est: ConstantEstimate,
                     budget: ErrorBudget = DEFAULT_BUDGET) -> float:
    """Recompute the ratio an estimate's witness claims, from scratch."""
    w = est.witness
    if w is None:
        raise ContractViolation(f"{est.name} has no witness")
    d = w["dim"]
    x = Vec.from_json(w["x"], dim=d) if "x" in w else None
    xd = x.dense() if x is not None else None

    def ratio(num, den):
        if den <= ZERO_TOL * max(1.0, den):
            return math.inf
        return num / den

    name = est.name
    if name == "Kb":
        return ratio(engine.norm(np.where(np.arange(d) < w["m"], xd, 0.0)), engine.norm(xd))
    if name in ("Ksu", "C_ell_tau"):
        return ratio(engine.norm(xd - _indicator_dense(d, w["A"]) * xd), engine.norm(xd))
    if name == "ConsecUnc":
        return ratio(engine.norm(xd - _indicator_dense(d, w["I"]) * xd), engine.norm(xd))
    if name in ("Delta_sd", "Delta_d"):
        return ratio(engine.norm(_indicator_dense(d, w["A"], w["eps"])),
                     engine.norm(_indicator_dense(d, w["B"], w["delta"])))
    if name == "C_tq":
        mask = _indicator_dense(d, w["A"]).astype(bool)
        return ratio(float(truncation_values(engine, xd, mask[None, :])[0]), engine.norm(xd))
    if name in ("C_g_con_tau", "P_g_con_tau"):
        num = engine.norm(xd - _indicator_dense(d, w["A"]) * xd)
        fn = sigma_con_m if name == "C_g_con_tau" else D_con_m
        return ratio(num, fn(engine, x, w["m"], budget))
    if name == "PropA_tau":
        tau = w["tau"]
        return ratio(engine.norm(tau * xd + _indicator_dense(d, w["A"], w["eps"])),
                     engine.norm(xd + _indicator_dense(d, w["B"], w["delta"])))
    if name == "QGLC":
        ind = _indicator_dense(d, w["A"], w["eps"])
        return ratio(engine.norm(ind), engine.norm(xd + ind))
    if name == "NearUnc_phi_t":
        return ratio(engine.norm(_indicator_dense(d, w["A"]) * xd), engine.norm(xd))
    if name == "C_sqs":
        return ratio(engine.norm(_indicator_dense(d, w["A"], w["eps"])), engine.norm(xd))
    raise ContractViolation(f"unknown constant {name!r}")


def estimate(engine: NormEngine, name: str, corpus: Corpus, tau: float | None = None,
             budget: ErrorBudget = DEFAULT_BUDGET) -> ConstantEstimate:
    """Dispatch by constant name using the corpus (and its dim for grid families)."""
    d = corpus.dim
    sb = corpus.sign_budget
    if name == "Kb":
        return est_Kb(engine, corpus)
    if name == "Ksu":
        return est_Ksu(engine, corpus)
    if name == "ConsecUnc":
        return est_consec_unc(engine, corpus)
    if name == "Delta_sd":
        return est_superdemocracy(engine, d, sign_budget=sb)
    if name == "Delta_d":
        return est_superdemocracy(engine, d, signed=False, sign_budget=sb)
    if name == "C_tq":
        return est_truncation_qg(engine, corpus)
    if name == "QGLC":
        return est_qglc(engine, d, sign_budget=sb)
    if name == "C_sqs":
        return est_sqs(engine, d, sign_budget=sb)
    tau = 1.0 if tau is None else tau
    if name == "C_ell_tau":
        return est_suppression_qg(engine, corpus, tau)
    if name == "C_g_con_tau":
        return est_consecutive_greedy(engine, corpus, tau, budget)
    if name == "P_g_con_tau":
        return est_cgpcc(engine, corpus, tau, budget)
    if name == "PropA_tau":
        return est_propA(engine, d, tau, sign_budget=sb)
    if name == "NearUnc_phi_t":
        return est_near_unc_phi(engine, d, tau)
    raise ContractViolation(f"unknown constant {name!r}")
