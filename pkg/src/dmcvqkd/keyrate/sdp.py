"""The linear SDP over the energy/acceptance feasible set.

The feasible set is the density-block region:

    1 - w <= Tr rho <= 1,   rho, P, N >= 0
    P >= Tr_B rho - rho_A,  N >= -(Tr_B rho - rho_A),  Tr P + Tr N <= 2 sqrt(w)
    p_j (<X>_j - (1+t_F) mu_X - w ||X||) <= Tr[(|j><j| (x) X) rho]
                                         <= p_j (<X>_j + (1+t_F) mu_X)

for X among the displaced photon-number observables.  The four printed
one-sided lines per observable collapse to this two-sided interval; the
w ||X|| widening applies to the lower side only (dimension reduction can
only lose expectation mass).  At w = 0 the slack blocks collapse to the
exact marginal constraint Tr_B rho = rho_A.

``linear_sdp_solve`` minimizes Tr[C rho] over this set with a primal-dual
interior-point backend (Clarabel via cvxpy); the compiled problem is cached
on the constraint set with the cost as a parameter, so repeated solves
(Frank-Wolfe iterations) skip canonicalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from ..core import ParameterError
from ..simulator import ConstellationSpec
from ..statproc import MomentEstimates, observable_norms
from .operators import displaced_number_ops

__all__ = [
    "SdpFailure",
    "ScalarConstraint",
    "ConstraintSet",
    "SdpSolution",
    "build_constraints",
    "linear_sdp_solve",
]

_GAP_ABS = 1e-9
_GAP_REL = 1e-9
_FEAS_TOL = 1e-9


class SdpFailure(RuntimeError):
    """Solver reported infeasibility or did not converge."""


@dataclass(frozen=True)
class ScalarConstraint:
    """lower <= Tr[op rho] <= upper (either bound may be None)."""

    op: np.ndarray
    lower: float | None
    upper: float | None
    label: str = ""

    def violation(self, rho: np.ndarray) -> float:
        val = float(np.real(np.trace(self.op @ rho)))
        v = 0.0
        if self.lower is not None:
            v = max(v, self.lower - val)
        if self.upper is not None:
            v = max(v, val - self.upper)
        return v


@dataclass
class ConstraintSet:
    """Feasible region of the linear SDP; dims = (register, Fock)."""

    dim: int
    scalars: list[ScalarConstraint]
    trace_bounds: tuple[float, float] = (1.0, 1.0)
    rho_A: np.ndarray | None = None
    w: float = 0.0
    dims: tuple[int, int] | None = None
    _compiled: dict = field(default_factory=dict, repr=False)

    def _compile(self):
        if "problem" in self._compiled:
            return self._compiled
        d = self.dim
        rho = cp.Variable((d, d), hermitian=True)
        cost = cp.Parameter((d, d), hermitian=True)
        cons = [rho >> 0]
        lo, hi = self.trace_bounds
        if lo == hi:
            cons.append(cp.real(cp.trace(rho)) == lo)
        else:
            cons.append(cp.real(cp.trace(rho)) >= lo)
            cons.append(cp.real(cp.trace(rho)) <= hi)
        for sc in self.scalars:
            expr = cp.real(cp.trace(sc.op.conj().T @ rho))
            if sc.lower is not None and sc.upper is not None \
                    and sc.lower == sc.upper:
                cons.append(expr == sc.lower)
                continue
            if sc.lower is not None:
                cons.append(expr >= sc.lower)
            if sc.upper is not None:
                cons.append(expr <= sc.upper)
        slack = {}
        if self.rho_A is not None:
            if self.dims is None:
                raise ParameterError("rho_A constraint needs register dims")
            da, db = self.dims
            diff = cp.partial_trace(rho, [da, db], axis=1) - self.rho_A
            if self.w > 0.0:
                P = cp.Variable((da, da), hermitian=True)
                N = cp.Variable((da, da), hermitian=True)
                cons += [P >> 0, N >> 0, P >> diff, N >> -diff,
                         cp.real(cp.trace(P) + cp.trace(N))
                         <= 2.0 * math.sqrt(self.w)]
                slack = {"P": P, "N": N}
            else:
                cons.append(diff == 0)
        objective = cp.Minimize(cp.real(cp.trace(cost.conj().T @ rho)))
        problem = cp.Problem(objective, cons)
        self._compiled = {"problem": problem, "rho": rho, "cost": cost,
                          **slack}
        return self._compiled

    def violation(self, rho: np.ndarray) -> float:
        """Worst constraint violation of a candidate point (PSD, trace,
        scalars, and the slack budget via the optimal P/N choice)."""
        v = max(0.0, -float(np.linalg.eigvalsh(rho)[0]))
        tr = float(np.real(np.trace(rho)))
        v = max(v, self.trace_bounds[0] - tr, tr - self.trace_bounds[1])
        for sc in self.scalars:
            v = max(v, sc.violation(rho))
        if self.rho_A is not None:
            da, db = self.dims
            diff = _partial_trace_B(rho, da, db) - self.rho_A
            nuclear = float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
            v = max(v, nuclear - 2.0 * math.sqrt(self.w))
        return v


def _partial_trace_B(rho: np.ndarray, da: int, db: int) -> np.ndarray:
    return np.trace(rho.reshape(da, db, da, db), axis1=1, axis2=3)


@dataclass(frozen=True)
class SdpSolution:
    rho: np.ndarray
    value: float
    dual_value: float           # certified lower bound on the true minimum
    status: str
    violation: float
    P: np.ndarray | None = None
    N: np.ndarray | None = None


def build_constraints(moments: MomentEstimates, mus: np.ndarray, t_F: float,
                      w: float, M: float, spec: ConstellationSpec,
                      n_c: int) -> ConstraintSet:
    """Assemble the Eq.-style feasible set from trusted moment estimates.

    mus holds the eight acceptance widths ordered as the four first-moment
    observables then the four second-moment ones; M is the detection limit
    on the (q, p) scale (sets the operator norms).
    """
    mus = np.asarray(mus, dtype=float)
    if mus.shape != (8,):
        raise ParameterError("need 8 mu values")
    dim_b = n_c + 1
    dim = 4 * dim_b
    norm1, norm2 = observable_norms(M)
    from .operators import build_rho_A  # local to avoid cycle at import time

    scalars = []
    for j in range(4):
        n_op, n2_op = displaced_number_ops(moments.displacement_centers[j], n_c)
        p_j = float(spec.probabilities[j])
        proj = np.zeros((4, 4))
        proj[j, j] = 1.0
        for which, op, center, mu, norm in (
                ("n", n_op, moments.n_tr[j], mus[j], norm1),
                ("n2", n2_op, moments.n_sq_tr[j], mus[4 + j], norm2)):
            full = np.kron(proj, op)
            lower = p_j * (center - (1.0 + t_F) * mu - w * norm)
            upper = p_j * (center + (1.0 + t_F) * mu)
            scalars.append(ScalarConstraint(full, lower, upper,
                                            label=f"{which}_beta{j}"))
    return ConstraintSet(
        dim=dim,
        scalars=scalars,
        trace_bounds=(1.0 - w, 1.0),
        rho_A=build_rho_A(spec),
        w=w,
        dims=(4, dim_b),
    )


def linear_sdp_solve(cost: np.ndarray, constraints: ConstraintSet,
                     warm_start: bool = True) -> SdpSolution:
    """Minimize Tr[cost rho] over the feasible set.

    Returns the primal optimizer together with a dual-side value: the
    solver's objective reduced by its gap tolerance, usable as a certified
    lower bound on the true minimum up to the reported violation.
    """
    compiled = constraints._compile()
    cost = np.asarray(cost, dtype=complex)
    compiled["cost"].value = 0.5 * (cost + cost.conj().T)
    problem = compiled["problem"]
    try:
        problem.solve(solver=cp.CLARABEL, warm_start=warm_start,
                      tol_gap_abs=_GAP_ABS, tol_gap_rel=_GAP_REL,
                      tol_feas=_FEAS_TOL)
    except cp.error.SolverError as exc:  # pragma: no cover - rare fallback
        try:
            problem.solve(solver=cp.SCS, eps=1e-9)
        except Exception:
            raise SdpFailure(f"solvers failed: {exc}") from exc
    if problem.status in ("infeasible", "unbounded"):
        raise SdpFailure(f"problem {problem.status}")
    status = "optimal" if problem.status == "optimal" else "max-iteration"
    rho = compiled["rho"].value
    rho = 0.5 * (rho + rho.conj().T)
    value = float(problem.value)
    gap = _GAP_ABS + _GAP_REL * (1.0 + abs(value))
    violation = constraints.violation(rho)
    dual_value = value - gap - violation
    P = compiled["P"].value if "P" in compiled else None
    N = compiled["N"].value if "N" in compiled else None
    return SdpSolution(rho, value, dual_value, status, violation, P, N)
