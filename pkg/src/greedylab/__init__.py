"""Greedy-type bases in finite-dimensional model sequence spaces.

Norm engines, tau-greedy sets, error functionals, lower estimates of basis
constants, and instance-wise checks of the inequalities that relate them.
"""

from .constants import ConstantEstimate, estimate
from .core import ContractViolation, EnumerationCapExceeded, Vec
from .corpus import Corpus, build_corpus
from .norms import make_engine
from .verify import CheckReport, run_checks

__all__ = ["CheckReport", "ConstantEstimate", "ContractViolation", "Corpus",
           "EnumerationCapExceeded", "Vec", "build_corpus", "estimate", "make_engine",
           "run_checks"]
__version__ = "0.1.0"
