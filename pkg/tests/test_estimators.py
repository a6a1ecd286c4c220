import numpy as np
import pytest
from sklearn.base import clone

from greedylab.estimators import BasisConstantEstimator, ThresholdingGreedyApproximator


def test_greedy_transform():
    X = np.array([[3.0, -1.0, 3.0], [1.0, 2.0, 0.0]])
    g = ThresholdingGreedyApproximator(m=1).fit(X)
    assert g.transform(X).tolist() == [[3.0, 0.0, 0.0], [0.0, 2.0, 0.0]]
    assert g.residual(X).tolist() == [[0.0, -1.0, 3.0], [1.0, 0.0, 0.0]]


def test_greedy_validation():
    X = np.ones((2, 3))
    with pytest.raises(ValueError):
        ThresholdingGreedyApproximator(m=4).fit(X)
    g = ThresholdingGreedyApproximator(m=1).fit(X)
    with pytest.raises(ValueError):
        g.transform(np.ones((2, 2)))


def test_clone_and_params():
    est = BasisConstantEstimator(constant="Ksu", space={"norm": "interval_sup"})
    assert clone(est).get_params() == est.get_params()
    assert ThresholdingGreedyApproximator(m=2).get_params() == {"m": 2}


def test_constant_estimator():
    X = np.array([[3.0, -1.0, 3.0], [0.0, 0.0, 0.0]])
    est = BasisConstantEstimator(constant="Ksu", space={"norm": "interval_sup"}).fit(X)
    assert est.value_ == pytest.approx(1.2)
    assert est.witness_["A"] == [2]
    with pytest.raises(ValueError):
        BasisConstantEstimator(constant="nope").fit(X)
    with pytest.raises(ValueError):
        BasisConstantEstimator(constant="C_ell_tau", tau=2.0).fit(X)
