"""scikit-learn style wrappers around the greedy algorithm and the constant estimators."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .constants import NAMES, estimate
from .core import ContractViolation, Vec
from .corpus import Corpus
from .norms import make_engine


class ThresholdingGreedyApproximator(BaseEstimator, TransformerMixin):
    """Replace each row by its m-term greedy sum.

    Rows are coefficient sequences (column j holds coordinate j+1). The
    greedy set keeps the m largest moduli with ties broken toward the smaller
    index, which is a tau-greedy set for every tau.
    """

    def __init__(self, m: int = 1):
        self.m = m

    def fit(self, X, y=None):
        X = check_array(X)
        if not 0 <= self.m <= X.shape[1]:
            raise ValueError(f"m={self.m} must lie in [0, {X.shape[1]}]")
        self.n_features_in_ = X.shape[1]
        return self

    def greedy_masks(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        # stable sort on -|x| keeps the smaller index first among ties
        order = np.argsort(-np.abs(X), axis=1, kind="stable")[:, :self.m]
        masks = np.zeros(X.shape, dtype=bool)
        np.put_along_axis(masks, order, True, axis=1)
        return masks

    def transform(self, X):
        X = check_array(X)
        return np.where(self.greedy_masks(X), X, 0.0)

    def residual(self, X):
        """``x - G_m(x)`` for each row."""
        X = check_array(X)
        return X - self.transform(X)


class BasisConstantEstimator(BaseEstimator):
    """Lower estimate of a basis constant over the rows of X.

    ``space`` is an engine config such as ``{"norm": "lp", "q": 1}``. Grid
    constants (superdemocracy, Property (A), ...) only use the width of X.
    """

    def __init__(self, constant: str = "Kb", space=None, tau: float | None = None):
        self.constant = constant
        self.space = space
        self.tau = tau

    def fit(self, X, y=None):
        X = check_array(X)
        if self.constant not in NAMES:
            raise ValueError(f"unknown constant {self.constant!r}")
        engine = make_engine(self.space if self.space is not None else {"norm": "lp"})
        vecs = [Vec.from_dense(row) for row in X if np.any(row)]
        corpus = Corpus(tuple(vecs), dim=X.shape[1])
        try:
            est = estimate(engine, self.constant, corpus, self.tau)
        except ContractViolation as exc:
            raise ValueError(str(exc)) from exc
        self.n_features_in_ = X.shape[1]
        self.estimate_ = est
        self.value_ = est.value
        self.witness_ = est.witness
        return self
