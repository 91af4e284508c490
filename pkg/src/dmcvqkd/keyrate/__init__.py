"""Certified finite-size secure-key-length computation.

Fock-space operator construction, the linear-SDP feasible set, Frank-Wolfe
minimization of the conditional entropy with a dual lower bound, and the
weight / smoothing correction terms.
"""

from .operators import (
    build_rho_A,
    coherent_vector,
    displaced_number_ops,
    displacement_matrix,
    honest_state,
    region_operators,
    RegionOperators,
)
from .sdp import (
    ConstraintSet,
    ScalarConstraint,
    SdpFailure,
    SdpSolution,
    build_constraints,
    linear_sdp_solve,
)
from .entropy import KeymapChannel, objective_grad
from .frankwolfe import EntropyBound, frank_wolfe_minimize
from .corrections import delta_aep, delta_w, key_length

__all__ = [
    "build_rho_A",
    "coherent_vector",
    "displaced_number_ops",
    "displacement_matrix",
    "honest_state",
    "region_operators",
    "RegionOperators",
    "ConstraintSet",
    "ScalarConstraint",
    "SdpFailure",
    "SdpSolution",
    "build_constraints",
    "linear_sdp_solve",
    "KeymapChannel",
    "objective_grad",
    "EntropyBound",
    "frank_wolfe_minimize",
    "delta_aep",
    "delta_w",
    "key_length",
]
