"""tau-greedy and pseudo-greedy sets of a coefficient sequence.

Sets are quantified over the window ``{1..dim}`` of the vector; coordinates
outside the support count as exact zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (DEFAULT_ENUMERATION_CAP, ContractViolation, IndexSet, Vec,
                   check_cap, index_set, mask_to_set, project, subset_masks)


@dataclass(frozen=True)
class GreedyQuery:
    x: Vec
    m: int
    tau: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ContractViolation(f"tau must lie in (0, 1], got {self.tau}")
        if self.m < 0:
            raise ContractViolation("m must be nonnegative")
        if self.m > self.x.dim:
            raise ContractViolation(f"order {self.m} exceeds dim {self.x.dim}")


def _abs_window(x: Vec) -> np.ndarray:
    return np.abs(x.dense())


def is_tau_greedy(q: GreedyQuery, A) -> bool:
    A = index_set(A)
    if len(A) != q.m:
        raise ContractViolation(f"|A| = {len(A)} but m = {q.m}")
    if A and A[-1] > q.x.dim:
        raise ContractViolation("A leaves the window {1..dim}")
    a = _abs_window(q.x)
    inside = np.zeros(len(a), dtype=bool)
    inside[[n - 1 for n in A]] = True
    lo = a[inside].min() if A else math.inf
    hi = a[~inside].max() if (~inside).any() else 0.0
    return bool(lo >= q.tau * hi)


def greedy_masks(absx: np.ndarray, m: int, tau: float = 1.0,
                 cap: int | None = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Masks (lexicographic) of all tau-greedy sets of order m for |x| = absx."""
    d = len(absx)
    if m > d:
        return np.zeros((0, d), dtype=bool)
    check_cap("greedy sets", math.comb(d, m), cap)
    masks = subset_masks(d, m)
    if m == 0:
        return masks
    lo = np.where(masks, absx, np.inf).min(axis=1)
    hi = np.where(masks, -np.inf, absx).max(axis=1) if m < d else np.zeros(len(masks))
    return masks[lo >= tau * np.maximum(hi, 0.0)]


def enumerate_greedy_sets(q: GreedyQuery, cap: int | None = DEFAULT_ENUMERATION_CAP) -> list[IndexSet]:
    return [mask_to_set(mk) for mk in greedy_masks(_abs_window(q.x), q.m, q.tau, cap)]


def canonical_greedy_set(q: GreedyQuery) -> IndexSet:
    """The m largest moduli, ties broken toward the smaller index."""
    a = _abs_window(q.x)
    order = sorted(range(len(a)), key=lambda i: (-a[i], i))
    return index_set(i + 1 for i in order[:q.m])


def greedy_sum(q: GreedyQuery, A) -> Vec:
    if not is_tau_greedy(q, A):
        raise ContractViolation(f"{tuple(A)} is not a {q.tau}-greedy set of order {q.m}")
    return project(q.x, A)


def is_pseudo_greedy(x: Vec, A) -> bool:
    """Every excluded modulus sits at or above sup_A or at or below inf_A."""
    A = index_set(A)
    if A and A[-1] > x.dim:
        raise ContractViolation("A leaves the window {1..dim}")
    a = _abs_window(x)
    inside = np.zeros(len(a), dtype=bool)
    inside[[n - 1 for n in A]] = True
    if not A:
        return True
    hi, lo = a[inside].max(), a[inside].min()
    out = a[~inside]
    return bool(np.all((out >= hi) | (out <= lo)))


def pseudo_greedy_as_difference(x: Vec, A) -> tuple[IndexSet, IndexSet] | None:
    """Nested greedy sets ``G1 <= G2`` with ``A = G2 - G1``, or None.

    Requires pairwise distinct moduli on the window, where the pair is unique.
    """
    a = _abs_window(x)
    if len(np.unique(a)) != len(a):
        raise ContractViolation("tied moduli: the nested greedy pair is not unique")
    A = index_set(A)
    if not A:
        return (), ()
    if not is_pseudo_greedy(x, A):
        return None
    top = a[[n - 1 for n in A]].max()
    g1 = index_set(i + 1 for i in range(len(a)) if a[i] > top)
    return g1, index_set(g1 + A)


def pseudo_greedy_masks(absx: np.ndarray, m: int,
                        cap: int | None = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Masks (lexicographic) of all pseudo-greedy sets of cardinality m."""
    d = len(absx)
    if m > d:
        return np.zeros((0, d), dtype=bool)
    check_cap("pseudo-greedy sets", math.comb(d, m), cap)
    masks = subset_masks(d, m)
    if m == 0:
        return masks
    hi = np.where(masks, absx, -np.inf).max(axis=1)
    lo = np.where(masks, absx, np.inf).min(axis=1)
    outside = ~masks
    ok = (absx[None, :] >= hi[:, None]) | (absx[None, :] <= lo[:, None]) | ~outside
    return masks[ok.all(axis=1)]
