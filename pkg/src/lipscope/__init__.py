"""Empirical probes of gradient smoothness conditions on test objectives with exact derivatives."""

from lipscope.dlnn import DlnnParams, make_dlnn3, make_dlnnN
from lipscope.fields import (
    ScalarField,
    make_exp_counterexample,
    make_fractional_counterexample,
    make_monomial,
    resolve,
)
from lipscope.kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DlnnParams",
    "ScalarField",
    "make_dlnn3",
    "make_dlnnN",
    "make_exp_counterexample",
    "make_fractional_counterexample",
    "make_monomial",
    "resolve",
]
