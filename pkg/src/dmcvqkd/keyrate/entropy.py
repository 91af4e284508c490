"""Conditional-entropy objective for the key-rate minimization.

f(rho) = D(G(rho) || Z(G(rho))) in bits, where G embeds the key register
through the single Kraus operator

    K = sum_z |z> (x) I_A (x) sqrt(R_z)

built from Bob's kept region operators (reverse reconciliation), and Z is
the pinching on the key register.  G(rho) is subnormalized when
postselection discards weight; the relative entropy is evaluated on the
subnormalized output, which is the per-round entropy contribution.

Matrix logarithms use Hermitian eigendecompositions with eigenvalues
clamped at eps_pert, making f finite and the gradient Lipschitz on the
PSD cone.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import ParameterError
from .operators import RegionOperators

__all__ = ["KeymapChannel", "objective_grad"]

_LN2 = math.log(2.0)


def _sqrt_psd(op: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(op)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _log_clamped(mat: np.ndarray, eps: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, eps, None)
    return (vecs * np.log(vals)) @ vecs.conj().T


class KeymapChannel:
    """The G map, its pinching Z, and their adjoint action."""

    def __init__(self, regions: RegionOperators, dim_a: int = 4):
        dim_b = regions.kept[0].shape[0]
        self.dim_a = dim_a
        self.dim_b = dim_b
        self.dim_in = dim_a * dim_b
        self.n_key = len(regions.kept)
        eye_a = np.eye(dim_a)
        blocks = [np.kron(eye_a, _sqrt_psd(r)) for r in regions.kept]
        # K: (n_key * dim_in) x dim_in, stacked key-register blocks
        self.kraus = np.vstack(blocks)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return self.kraus @ rho @ self.kraus.conj().T

    def pinch(self, grho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(grho)
        d = self.dim_in
        for z in range(self.n_key):
            sl = slice(z * d, (z + 1) * d)
            out[sl, sl] = grho[sl, sl]
        return out

    def adjoint(self, mat: np.ndarray) -> np.ndarray:
        return self.kraus.conj().T @ mat @ self.kraus


def objective_grad(rho: np.ndarray, channel: KeymapChannel,
                   eps_pert: float = 1e-12,
                   psd_tol: float = 1e-7) -> tuple[float, np.ndarray]:
    """Objective value (bits) and gradient at a density block.

    grad = K^dag (log G(rho) - log Z(G(rho))) K / ln 2, the adjoint-channel
    image of the matrix-log difference.
    """
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < -psd_tol:
        raise ParameterError(f"rho not PSD within tolerance ({min_eig:.2e})")
    grho = channel.apply(rho)
    weight = float(np.real(np.trace(grho)))
    if weight <= eps_pert:
        # all mass discarded: zero entropy contribution, flat direction
        return 0.0, np.zeros_like(rho)
    zrho = channel.pinch(grho)
    log_g = _log_clamped(grho, eps_pert)
    log_z = _log_clamped(zrho, eps_pert)
    diff = log_g - log_z
    value = float(np.real(np.trace(grho @ diff))) / _LN2
    grad = channel.adjoint(diff) / _LN2
    return value, 0.5 * (grad + grad.conj().T)
