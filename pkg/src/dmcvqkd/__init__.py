"""Desk-scale engine for discrete-modulated continuous-variable QKD with
composable finite-size security accounting."""

__version__ = "0.1.0"

from .core import (
    BudgetError,
    EpsilonBudget,
    InvalidSampleError,
    NuSample,
    ParameterError,
    ProtocolParams,
    alpha_from_means,
    b_pa_from_eps,
    epsilon_total,
    snu_to_nu,
)

__all__ = [
    "BudgetError",
    "EpsilonBudget",
    "InvalidSampleError",
    "NuSample",
    "ParameterError",
    "ProtocolParams",
    "alpha_from_means",
    "b_pa_from_eps",
    "epsilon_total",
    "snu_to_nu",
    "__version__",
]
