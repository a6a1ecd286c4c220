"""Deterministic test corpora and coefficient-grid families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .core import ContractViolation, Vec

#: nonzero part of the coefficient grid {0, +-1/4, +-1/2, +-3/4, +-1}
UNIT_GRID = (-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0)
STRUCTURED_VALUES = (1, 2, 3)


@dataclass(frozen=True)
class Corpus:
    vectors: tuple = ()
    dim: int = 6
    sign_budget: int = 10**5
    seed: int = 0

    def __post_init__(self):
        for v in self.vectors:
            if v.dim != self.dim:
                raise ContractViolation(f"corpus vector {v!r} has dim {v.dim}, expected {self.dim}")

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return len(self.vectors)

    @classmethod
    def of(cls, vectors, dim: int | None = None, **kw) -> "Corpus":
        vectors = list(vectors)
        if dim is None:
            dim = max((v.dim for v in vectors), default=1)
        return cls(tuple(v.with_dim(dim) for v in vectors), dim=dim, **kw)


def structured_stratum(dim: int, max_support: int = 4, values=STRUCTURED_VALUES) -> list[Vec]:
    """All vectors with entries in ``{0, +-values}`` and at most ``max_support``
    nonzero entries, ordered by support size, support, then values."""
    vals = sorted({float(s * v) for v in values for s in (1, -1)})
    out = []
    for k in range(1, min(max_support, dim) + 1):
        for supp in combinations(range(1, dim + 1), k):
            for coeffs in product(vals, repeat=k):
                out.append(Vec(dict(zip(supp, coeffs)), dim=dim))
    return out


def build_corpus(dim: int = 6, seed: int = 0, max_support: int = 4, structured_budget: int = 512,
                 n_random: int = 64, values=STRUCTURED_VALUES, sign_budget: int = 10**5) -> Corpus:
    """Structured stratum (subsampled to the budget) plus a random stratum.

    The same arguments always give the same corpus.
    """
    if dim < 1:
        raise ContractViolation("dim must be positive")
    rng = np.random.default_rng(seed)
    structured = structured_stratum(dim, max_support, values)
    if structured_budget is not None and len(structured) > structured_budget:
        keep = np.sort(rng.choice(len(structured), size=structured_budget, replace=False))
        structured = [structured[i] for i in keep]
    rand = []
    for _ in range(n_random):
        k = int(rng.integers(1, dim + 1))
        supp = np.sort(rng.choice(dim, size=k, replace=False)) + 1
        coeffs = np.round(rng.uniform(-3.0, 3.0, size=k), 4)
        rand.append(Vec({int(n): float(c) for n, c in zip(supp, coeffs)}, dim=dim))
    vectors = [v for v in structured + rand if v.support]
    return Corpus(tuple(vectors), dim=dim, sign_budget=sign_budget, seed=seed)


@lru_cache(maxsize=None)
def _value_block(k: int, grid: tuple) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0))
    return np.array(list(product(grid, repeat=k)), dtype=float)


def grid_family(dim: int, max_support: int, grid=UNIT_GRID, scale: float = 1.0,
                cap: int | None = None):
    """Yield ``(support, X)`` for every support of size <= max_support, where X
    holds all vectors with that exact support and nonzero entries from the
    scaled grid."""
    grid = tuple(float(g) for g in grid)
    total = sum(math.comb(dim, k) * len(grid) ** k for k in range(min(max_support, dim) + 1))
    if cap is not None and total > cap:
        from .core import EnumerationCapExceeded
        raise EnumerationCapExceeded("grid vectors", total, cap)
    for k in range(min(max_support, dim) + 1):
        block = _value_block(k, grid) * scale
        for supp in combinations(range(dim), k):
            X = np.zeros((len(block), dim))
            if k:
                X[:, list(supp)] = block
            yield tuple(n + 1 for n in supp), X
