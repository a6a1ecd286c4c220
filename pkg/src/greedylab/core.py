"""Finitely supported coefficient sequences, signs, index sets and projections.

Indices are 1-based. A :class:`Vec` carries an ambient truncation dimension
``dim``; everything outside ``{1..dim}`` is an exact zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

IndexSet = tuple  # sorted tuple of distinct positive ints
SignVector = Mapping[int, int]

DEFAULT_ENUMERATION_CAP = 10**6


class ContractViolation(ValueError):
    """An operation was called outside its precondition."""


class EnumerationCapExceeded(RuntimeError):
    """A combinatorial family is larger than the configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: {size} candidates exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


def index_set(elems: Iterable[int] = ()) -> IndexSet:
    """Normalize an iterable of positive integers into a sorted tuple."""
    out = tuple(sorted(set(int(n) for n in elems)))
    if out and out[0] < 1:
        raise ContractViolation(f"indices must be positive, got {out[0]}")
    return out


@dataclass(frozen=True)
class Interval:
    """The run ``{start, ..., start + length - 1}``; ``length`` may be 0."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 1 or self.length < 0:
            raise ContractViolation(f"bad interval start={self.start} length={self.length}")

    @property
    def indices(self) -> IndexSet:
        return tuple(range(self.start, self.start + self.length))

    def __len__(self):
        return self.length


class Vec:
    """Immutable finitely supported real sequence.

    Zero coefficients are never stored. ``dim`` is the enumeration window;
    it defaults to the largest index in the support (at least 1).
    """

    __slots__ = ("_coeffs", "_dim", "_dense")

    def __init__(self, coeffs: Mapping[int, float] | None = None, dim: int | None = None):
        clean = {}
        for k, v in (coeffs or {}).items():
            k = int(k)
            v = float(v)
            if k < 1:
                raise ContractViolation(f"indices are 1-based, got {k}")
            if not math.isfinite(v):
                raise ContractViolation(f"coefficient at {k} is not finite")
            if v != 0.0:
                clean[k] = v
        top = max(clean, default=0)
        if dim is None:
            dim = max(top, 1)
        elif dim < top:
            raise ContractViolation(f"dim {dim} smaller than max support index {top}")
        self._coeffs = MappingProxyType(dict(sorted(clean.items())))
        self._dim = int(dim)
        self._dense = None

    @classmethod
    def from_dense(cls, arr, dim: int | None = None) -> "Vec":
        arr = np.asarray(arr, dtype=float)
        return cls({i + 1: v for i, v in enumerate(arr) if v != 0.0},
                   dim=len(arr) if dim is None else dim)

    @classmethod
    def from_json(cls, text: str | Mapping, dim: int | None = None) -> "Vec":
        """Parse the corpus literal ``{"1": 3, "2": -1}``."""
        obj = json.loads(text) if isinstance(text, str) else text
        if not isinstance(obj, Mapping):
            raise ValueError("vector literal must be a JSON object")
        coeffs = {}
        for k, v in obj.items():
            if not str(k).isdigit():
                raise ValueError(f"bad index {k!r}")
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"bad coefficient {v!r} at {k}")
            coeffs[int(k)] = v
        return cls(coeffs, dim=dim)

    # -- accessors ---------------------------------------------------------
    @property
    def coeffs(self) -> Mapping[int, float]:
        return self._coeffs

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def support(self) -> IndexSet:
        return tuple(self._coeffs)

    def __getitem__(self, n: int) -> float:
        return self._coeffs.get(n, 0.0)

    def dense(self, dim: int | None = None) -> np.ndarray:
        """Coefficients as a read-only array of length ``dim`` (index n at n-1)."""
        d = self._dim if dim is None else dim
        if d == self._dim and self._dense is not None:
            return self._dense
        if self._coeffs and max(self._coeffs) > d:
            raise ContractViolation("dense window cuts the support")
        arr = np.zeros(d)
        for k, v in self._coeffs.items():
            arr[k - 1] = v
        arr.flags.writeable = False
        if d == self._dim:
            self._dense = arr
        return arr

    def sup_abs(self) -> float:
        return max((abs(v) for v in self._coeffs.values()), default=0.0)

    def with_dim(self, dim: int) -> "Vec":
        return Vec(self._coeffs, dim=dim)

    def to_json(self) -> dict:
        return {str(k): _jsonable(v) for k, v in self._coeffs.items()}

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "Vec") -> "Vec":
        out = dict(self._coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return Vec(out, dim=max(self._dim, other.dim))

    def __neg__(self) -> "Vec":
        return Vec({k: -v for k, v in self._coeffs.items()}, dim=self._dim)

    def __sub__(self, other: "Vec") -> "Vec":
        return self + (-other)

    def __mul__(self, lam: float) -> "Vec":
        lam = float(lam)
        return Vec({k: lam * v for k, v in self._coeffs.items()}, dim=self._dim)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Vec):
            return NotImplemented
        return dict(self._coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def __repr__(self):
        body = ", ".join(f"{k}: {v:g}" for k, v in self._coeffs.items())
        return f"Vec({{{body}}}, dim={self._dim})"


def _jsonable(v: float):
    return int(v) if float(v).is_integer() and abs(v) < 2**53 else float(v)


def zero(dim: int = 1) -> Vec:
    return Vec({}, dim=dim)


def indicator(A: Iterable[int], eps: SignVector | None = None, dim: int | None = None) -> Vec:
    """``1_{eps,A}``: sum of ``eps_n e_n`` over ``A`` (all ``+1`` when eps is None)."""
    A = index_set(A)
    if eps is None:
        coeffs = {n: 1.0 for n in A}
    else:
        missing = [n for n in A if n not in eps]
        if missing:
            raise ContractViolation(f"signs undefined on {missing}")
        coeffs = {}
        for n in A:
            s = eps[n]
            if s not in (1, -1):
                raise ContractViolation(f"sign at {n} is {s}, expected +1 or -1")
            coeffs[n] = float(s)
    top = A[-1] if A else 1
    return Vec(coeffs, dim=max(top, dim or 1))


def project(x: Vec, A: Iterable[int]) -> Vec:
    """``P_A(x)``: restriction of x to A."""
    keep = set(A)
    return Vec({k: v for k, v in x.coeffs.items() if k in keep}, dim=x.dim)


def partial_sum(x: Vec, m: int) -> Vec:
    """``S_m(x)``: restriction to ``{1..m}``."""
    if m < 0:
        raise ContractViolation("m must be nonnegative")
    return Vec({k: v for k, v in x.coeffs.items() if k <= m}, dim=x.dim)


def sgn(v: float) -> int:
    return -1 if v < 0 else 1


def sign_vector(x: Vec, A: Iterable[int]) -> dict[int, int]:
    """``eps(x)`` restricted to A, with ``sgn(0) = 1``."""
    return {n: sgn(x[n]) for n in index_set(A)}


# -- enumeration helpers shared by the greedy/oracle/constant modules --------

def check_cap(what: str, size: int, cap: int | None) -> None:
    if cap is not None and size > cap:
        raise EnumerationCapExceeded(what, size, cap)


@lru_cache(maxsize=None)
def subset_masks(d: int, k: int) -> np.ndarray:
    """Boolean masks of all k-subsets of ``{1..d}`` in lexicographic order."""
    combos = list(combinations(range(d), k))
    out = np.zeros((len(combos), d), dtype=bool)
    for row, c in enumerate(combos):
        out[row, list(c)] = True
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def signed_indicators(d: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``1_{eps,A}`` with ``|A| = k`` inside ``{1..d}`` as dense rows.

    Returns ``(rows, masks)``; rows are ordered by set (lexicographic), then by
    sign pattern with ``+1`` before ``-1`` at each position.
    """
    masks = subset_masks(d, k)
    if k == 0:
        rows = np.zeros((1, d))
        return rows, masks.copy()
    signs = 1.0 - 2.0 * ((np.arange(2**k)[:, None] >> np.arange(k - 1, -1, -1)) & 1)
    rows = np.zeros((len(masks) * 2**k, d))
    out_masks = np.repeat(masks, 2**k, axis=0)
    for i, mask in enumerate(masks):
        cols = np.flatnonzero(mask)
        rows[i * 2**k:(i + 1) * 2**k][:, cols] = signs
    rows.flags.writeable = False
    out_masks.flags.writeable = False
    return rows, out_masks


def mask_to_set(mask) -> IndexSet:
    return tuple(int(i) + 1 for i in np.flatnonzero(mask))


def signs_of_row(row, A: IndexSet) -> dict[int, int]:
    return {n: (1 if row[n - 1] > 0 else -1) for n in A}
