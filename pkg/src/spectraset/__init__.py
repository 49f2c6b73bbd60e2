"""Numerical toolkit for commuting operator tuples over the symmetrized polydisc and the tetrablock."""

__version__ = "0.1.0"

from .errors import (
    HypothesisError,
    InvalidInputError,
    NonConvergenceError,
    NumericalAnomalyError,
    SpectrasetError,
    UnsolvableError,
)
from .linalg import DEFAULT_TOL, Certificate, Subspace, Tolerances, Verdict
from .asymptotics import classify_contraction, limits
from .decompose import SCHEMES, decompose_tuple, scalar_decomposition
from .gamma import Budget, GammaTuple, classify_gamma, decompose_gamma, fo_tuple, make_gamma_tuple, symmetrize
from .tetra import ETriple, classify_e, decompose_e, e_membership, fundamental_ops, gamma_to_e, make_e_triple

__all__ = [
    "Budget",
    "Certificate",
    "DEFAULT_TOL",
    "ETriple",
    "GammaTuple",
    "HypothesisError",
    "InvalidInputError",
    "NonConvergenceError",
    "NumericalAnomalyError",
    "SCHEMES",
    "SpectrasetError",
    "Subspace",
    "Tolerances",
    "UnsolvableError",
    "Verdict",
    "classify_contraction",
    "classify_e",
    "classify_gamma",
    "decompose_e",
    "decompose_gamma",
    "decompose_tuple",
    "e_membership",
    "fo_tuple",
    "fundamental_ops",
    "gamma_to_e",
    "limits",
    "make_e_triple",
    "make_gamma_tuple",
    "scalar_decomposition",
    "symmetrize",
]
