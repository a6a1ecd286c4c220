"""Quasi-norm engines for the model sequence spaces.

Every engine evaluates its norm on a :class:`~greedylab.core.Vec` or, batched,
on any array whose last axis is the coordinate axis (position ``n-1`` holds
coordinate ``n``). Batched evaluation is what the estimators and checks use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .core import ContractViolation, Vec


@dataclass(frozen=True)
class BasisBounds:
    """``c1 <= ||e_n||, ||e_n^*|| <= c2`` for all n."""

    c1: float
    c2: float


class NormEngine:
    name: str = "abstract"
    p_exp: float = 1.0
    #: removing coordinates never increases the norm
    suppression_unconditional: bool = False

    def norm(self, x) -> float | np.ndarray:
        if isinstance(x, Vec):
            return float(self._norm(x.dense()[None, :])[0])
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            return float(self._norm(arr[None, :])[0])
        flat = arr.reshape(-1, arr.shape[-1])
        return self._norm(flat).reshape(arr.shape[:-1])

    __call__ = norm

    def _norm(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self) -> BasisBounds:
        return BasisBounds(1.0, 1.0)

    def certified(self) -> dict[str, float]:
        """Analytically known constants of the canonical basis (possibly empty)."""
        return {}

    def config(self) -> dict[str, Any]:
        raise NotImplementedError

    def best_free_residual(self, rows: np.ndarray, free: np.ndarray) -> np.ndarray | None:
        """``inf ||x - sum_{n in free} a_n e_n||`` over the free coefficients.

        ``rows`` has shape (k, d), ``free`` is a boolean mask of shape (k, d)
        or (d,). Returns None when the engine has no exact formula.
        """
        if self.suppression_unconditional:
            return self._norm(np.where(free, 0.0, rows))
        return None

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.config().items() if k != "norm")
        return f"{type(self).__name__}({params})"

    def __eq__(self, other):
        return isinstance(other, NormEngine) and self.config() == other.config()

    def __hash__(self):
        return hash(repr(self))

    @property
    def label(self) -> str:
        cfg = self.config()
        extras = [f"{k}={cfg[k]}" for k in sorted(cfg) if k != "norm"]
        return cfg["norm"] + ("(" + ",".join(extras) + ")" if extras else "")


class LpNorm(NormEngine):
    """``(sum |x_n|^q)^(1/q)``; a q-norm (p_exp = q) when q < 1."""

    suppression_unconditional = True

    def __init__(self, q: float = 1.0):
        if not q > 0:
            raise ContractViolation(f"q must be positive, got {q}")
        self.q = float(q)
        self.name = "lp"
        self.p_exp = min(self.q, 1.0)

    def _norm(self, rows):
        a = np.abs(rows)
        if self.q == 1.0:
            return a.sum(axis=1)
        if self.q == 2.0:
            return np.sqrt((a * a).sum(axis=1))
        return (a**self.q).sum(axis=1) ** (1.0 / self.q)

    def certified(self):
        return dict(Kb=1.0, Ksu=1.0, Delta_d=1.0, Delta_sd=1.0, C_ell_tau=1.0,
                    C_tq=1.0, PropA=1.0, ConsecUnc=1.0)

    def config(self):
        return {"norm": "lp", "q": _num(self.q)}


class SupNorm(NormEngine):
    """``max |x_n|``: the c_0 model."""

    suppression_unconditional = True
    name = "sup"

    def _norm(self, rows):
        if rows.shape[1] == 0:
            return np.zeros(rows.shape[0])
        return np.abs(rows).max(axis=1)

    def certified(self):
        return dict(Kb=1.0, Ksu=1.0, Delta_d=1.0, Delta_sd=1.0, C_ell_tau=1.0,
                    C_tq=1.0, PropA=1.0, ConsecUnc=1.0)

    def config(self):
        return {"norm": "sup"}


class WeightedLpNorm(NormEngine):
    """``(sum w_n |x_n|^q)^(1/q)``; the weight list is extended by its last value."""

    suppression_unconditional = True

    def __init__(self, q: float = 1.0, weights: Sequence[float] = (1.0,)):
        weights = [float(w) for w in weights]
        if not weights or min(weights) <= 0:
            raise ContractViolation("weights must be a nonempty list of positive reals")
        if not q > 0:
            raise ContractViolation(f"q must be positive, got {q}")
        self.q = float(q)
        self.weights = tuple(weights)
        self.name = "weighted_lp"
        self.p_exp = min(self.q, 1.0)

    def weight_vector(self, d: int) -> np.ndarray:
        w = np.full(d, self.weights[-1])
        k = min(d, len(self.weights))
        w[:k] = self.weights[:k]
        return w

    def _norm(self, rows):
        w = self.weight_vector(rows.shape[1])
        return ((np.abs(rows) ** self.q) * w).sum(axis=1) ** (1.0 / self.q)

    def bounds(self):
        # ||e_n|| = w_n^(1/q), ||e_n^*|| = w_n^(-1/q)
        vals = [w ** (s / self.q) for w in self.weights for s in (1, -1)]
        return BasisBounds(min(vals), max(vals))

    def certified(self):
        ratio = (max(self.weights) / min(self.weights)) ** (1.0 / self.q)
        out = dict(Kb=1.0, Ksu=1.0, Delta_d=ratio, Delta_sd=ratio, C_ell_tau=1.0,
                   C_tq=1.0, ConsecUnc=1.0)
        if ratio == 1.0:
            out["PropA"] = 1.0
        return out

    def config(self):
        return {"norm": "weighted_lp", "q": _num(self.q),
                "weights": [_num(w) for w in self.weights]}


class IntervalSupNorm(NormEngine):
    """``sup_{M >= N >= 1} |x_N + ... + x_M|``.

    The interval sums are differences of prefix sums ``P_0 = 0, P_1, ..., P_d``,
    so the norm is ``max P - min P``.
    """

    name = "interval_sup"

    def _norm(self, rows):
        if rows.shape[1] == 0:
            return np.zeros(rows.shape[0])
        prefix = np.cumsum(rows, axis=1)
        hi = np.maximum(prefix.max(axis=1), 0.0)
        lo = np.minimum(prefix.min(axis=1), 0.0)
        return hi - lo

    def best_free_residual(self, rows, free):
        # A free coordinate j makes P_j arbitrary, which shifts the whole block
        # of prefix sums up to the next free coordinate by an arbitrary offset.
        # Offsets can stack every block inside the widest one.
        rows = np.atleast_2d(rows)
        free = np.broadcast_to(free, rows.shape)
        out = np.empty(rows.shape[0])
        for i in range(rows.shape[0]):
            widest = 0.0
            lo = hi = level = 0.0
            for j in range(rows.shape[1]):
                if free[i, j]:
                    widest = max(widest, hi - lo)
                    lo = hi = level = 0.0
                else:
                    level += rows[i, j]
                    lo = min(lo, level)
                    hi = max(hi, level)
            out[i] = max(widest, hi - lo)
        return out

    def certified(self):
        # bimonotone, hence 1-Schauder
        return dict(Kb=1.0)

    def config(self):
        return {"norm": "interval_sup"}


def _num(v: float):
    return int(v) if float(v).is_integer() else float(v)


def make_engine(cfg: Mapping[str, Any] | str) -> NormEngine:
    """Instantiate an engine from its JSON space config."""
    if isinstance(cfg, str):
        cfg = {"norm": cfg}
    kind = cfg.get("norm")
    extra = set(cfg) - {"norm", "q", "weights"}
    if extra:
        raise ValueError(f"unknown space config keys: {sorted(extra)}")
    if kind == "lp":
        return LpNorm(cfg.get("q", 1.0))
    if kind == "sup":
        return SupNorm()
    if kind == "weighted_lp":
        if "weights" not in cfg:
            raise ValueError("weighted_lp needs 'weights'")
        return WeightedLpNorm(cfg.get("q", 1.0), cfg["weights"])
    if kind == "interval_sup":
        return IntervalSupNorm()
    raise ValueError(f"unknown norm {kind!r}")


def norm(engine: NormEngine, x) -> float:
    return engine.norm(x)


def p_convexity_audit(engine: NormEngine, pairs) -> float:
    """Largest ``||x+y||^p / (||x||^p + ||y||^p)`` over the pairs (0/0 skipped)."""
    pairs = list(pairs)
    if not pairs:
        raise ContractViolation("p_convexity_audit needs a nonempty corpus")
    p = engine.p_exp
    worst = 0.0
    for x, y in pairs:
        d = max(x.dim, y.dim)
        nx, ny = engine.norm(x.dense(d)), engine.norm(y.dense(d))
        nxy = engine.norm(x.dense(d) + y.dense(d))
        den = nx**p + ny**p
        if den == 0.0:
            if nxy > 0:
                return math.inf
            continue
        worst = max(worst, nxy**p / den)
    return worst
