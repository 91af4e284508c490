"""Operators on the 4-dim register tensor (n_c+1)-dim Fock cutoff space.

Everything here is expressed in coherent-amplitude units: region operators
integrate the heterodyne POVM (1/pi)|gamma><gamma| over key-map regions
with amplitude-scale radii, and displacement centres are the measured
beta_i = (qbar + i pbar)/sqrt(2).

Matrix elements use log-domain gamma functions throughout so that cutoffs
up to the paper's n_c = 20 and beyond stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from ..core import ParameterError
from ..simulator import ConstellationSpec

__all__ = [
    "coherent_vector",
    "build_rho_A",
    "RegionOperators",
    "region_operators",
    "displacement_matrix",
    "displaced_number_ops",
    "honest_state",
]


def coherent_vector(alpha: complex, n_c: int) -> np.ndarray:
    """Fock coefficients of |alpha> up to the cutoff (not renormalized)."""
    n = np.arange(n_c + 1)
    if alpha == 0:
        vec = np.zeros(n_c + 1, dtype=complex)
        vec[0] = 1.0
        return vec
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) \
        - 0.5 * gammaln(n + 1)
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(log_mag) * phase


def build_rho_A(spec: ConstellationSpec) -> np.ndarray:
    """Alice's source-replacement marginal.

    <j|rho_A|i> = sqrt(p_i p_j) <alpha_i|alpha_j> with the coherent overlap
    exp(-|a_i|^2/2 - |a_j|^2/2 + conj(a_i) a_j); PSD with unit trace.
    """
    amps = spec.amplitudes
    probs = spec.probabilities
    rho = np.empty((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            overlap = np.exp(-0.5 * abs(amps[i]) ** 2 - 0.5 * abs(amps[j]) ** 2
                             + np.conj(amps[i]) * amps[j])
            rho[j, i] = math.sqrt(probs[i] * probs[j]) * overlap
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True)
class RegionOperators:
    """Key-map POVM elements on the Fock cutoff space."""

    kept: tuple[np.ndarray, ...]   # R_z, z = 0..3
    discard: np.ndarray            # R_perp, built from its own region integral

    @property
    def all_sum(self) -> np.ndarray:
        return sum(self.kept) + self.discard


def _radial_log(m: np.ndarray, n: np.ndarray, lo_sq: float,
                hi_sq: float) -> np.ndarray:
    """(1/2) * int_{lo^2}^{hi^2} e^-u u^{(m+n)/2} du / sqrt(m! n!)."""
    s = (m + n) / 2.0 + 1.0
    frac = gammainc(s, hi_sq) - gammainc(s, lo_sq) if math.isfinite(hi_sq) \
        else gammaincc(s, lo_sq)
    log_coeff = gammaln(s) - 0.5 * (gammaln(m + 1.0) + gammaln(n + 1.0))
    return 0.5 * np.exp(log_coeff) * frac


def _angular(z: int, k: np.ndarray) -> np.ndarray:
    """int_{z pi/2}^{(z+1) pi/2} e^{i k theta} d theta."""
    out = np.empty(k.shape, dtype=complex)
    zero = k == 0
    out[zero] = math.pi / 2.0
    kk = k[~zero]
    a = z * math.pi / 2.0
    out[~zero] = (np.exp(1j * kk * (a + math.pi / 2.0))
                  - np.exp(1j * kk * a)) / (1j * kk)
    return out


def region_operators(delta_r: float, m_amp: float, n_c: int) -> RegionOperators:
    """Heterodyne-POVM integrals over the four kept sectors and the discard
    region.

    R_z = (1/pi) int_{sector z, delta_r <= |gamma| <= m_amp}
    |gamma><gamma| d^2 gamma truncated to the cutoff; the discard operator
    is integrated directly over |gamma| < delta_r and |gamma| > m_amp (it
    is diagonal), so completeness sum(R_z) + R_perp = I is a property of
    the numerics, not of the construction.
    """
    if n_c < 1:
        raise ParameterError("n_c must be >= 1")
    if not (0.0 <= delta_r < m_amp):
        raise ParameterError("need 0 <= delta_r < m_amp")
    dim = n_c + 1
    idx = np.arange(dim)
    m_grid, n_grid = np.meshgrid(idx, idx, indexing="ij")
    radial = _radial_log(m_grid.astype(float), n_grid.astype(float),
                         delta_r ** 2,
                         m_amp ** 2 if math.isfinite(m_amp) else math.inf)
    k = m_grid - n_grid
    kept = []
    for z in range(4):
        op = (_angular(z, k) / math.pi) * radial
        kept.append(0.5 * (op + op.conj().T))

    s = idx + 1.0
    below = gammainc(s, delta_r ** 2) if delta_r > 0 else np.zeros(dim)
    above = gammaincc(s, m_amp ** 2) if math.isfinite(m_amp) else np.zeros(dim)
    discard = np.diag((below + above).astype(complex))
    return RegionOperators(tuple(kept), discard)


def displacement_matrix(beta: complex, dim: int) -> np.ndarray:
    """Fock matrix elements <m|D(beta)|n> up to dim-1 (Cahill-Glauber form),
    via the stable log-domain Laguerre recurrence."""
    if beta == 0:
        return np.eye(dim, dtype=complex)
    x = abs(beta) ** 2
    out = np.empty((dim, dim), dtype=complex)
    # generalized Laguerre L_n^{(k)}(x) by upward recurrence in n for each k
    for m in range(dim):
        for n in range(dim):
            if n > m:
                continue
            k = m - n
            # L_n^{(k)}(x)
            l_prev, l_cur = 1.0, 1.0 + k - x
            if n == 0:
                lag = l_prev
            elif n == 1:
                lag = l_cur
            else:
                for j in range(2, n + 1):
                    l_prev, l_cur = l_cur, (((2 * j - 1 + k - x) * l_cur
                                             - (j - 1 + k) * l_prev) / j)
                lag = l_cur
            log_pref = 0.5 * (gammaln(n + 1) - gammaln(m + 1)) \
                + k * math.log(abs(beta)) - 0.5 * x
            val = math.exp(log_pref) * lag * np.exp(1j * k * np.angle(beta))
            out[m, n] = val
            out[n, m] = (-1.0) ** k * np.conj(val)
    return out


def displaced_number_ops(beta: complex, n_c: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact cutoff-space matrix elements of D(beta) n D(beta)^dag and its
    square, i.e. the photon number displaced to have zero mean on |beta>.

    n_beta = n - beta a^dag - conj(beta) a + |beta|^2 is tridiagonal, so its
    exact square only needs one level of padding before truncation.
    """
    dim = n_c + 1
    pad = dim + 2
    n_diag = np.arange(pad, dtype=float)
    a = np.diag(np.sqrt(n_diag[1:]), k=1)      # annihilation
    n_op = np.diag(n_diag).astype(complex)
    n_beta = n_op - beta * a.conj().T - np.conj(beta) * a \
        + abs(beta) ** 2 * np.eye(pad)
    n_beta_sq = n_beta @ n_beta
    return n_beta[:dim, :dim], n_beta_sq[:dim, :dim]


def _loss_kraus(eta: float, dim: int) -> list[np.ndarray]:
    """Pure-loss Kraus operators on the truncated space (exact: loss only
    maps downward in photon number)."""
    if eta >= 1.0:
        return [np.eye(dim, dtype=complex)]
    ops = []
    log_eta = math.log(eta)
    log_1m = math.log1p(-eta)
    for k in range(dim):
        mat = np.zeros((dim, dim), dtype=complex)
        for n in range(k, dim):
            log_c = 0.5 * (gammaln(n + 1) - gammaln(k + 1)
                           - gammaln(n - k + 1))
            mat[n - k, n] = math.exp(
                log_c + 0.5 * (n - k) * log_eta + 0.5 * k * log_1m)
        ops.append(mat)
    return ops


def _additive_noise_points(nbar: float, order: int = 8):
    """Gauss-Hermite discretization of the additive Gaussian noise channel
    with nbar added photons (complex displacement variance nbar)."""
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    # each real component of the displacement has variance nbar/2
    scale = math.sqrt(nbar)  # hermgauss: x ~ e^{-x^2}; component = x*sqrt(nbar)
    pts, wts = [], []
    for i in range(order):
        for j in range(order):
            pts.append(scale * complex(nodes[i], nodes[j]))
            wts.append(weights[i] * weights[j] / math.pi)
    return pts, np.array(wts)


def honest_state(spec: ConstellationSpec, centers: np.ndarray,
                 nbar: float, n_c: int) -> np.ndarray:
    """Gaussian-channel construction of the joint register-Fock state.

    Applies a pure-loss channel matched to the measured displacement
    centres, then an additive-noise channel carrying nbar thermal photons,
    to the source-replacement state sum_i sqrt(p_i)|i>|alpha_i>.  Both maps
    are trace preserving, so the A-marginal equals build_rho_A up to Fock
    truncation; the displaced first moment at centre beta_i is nbar.

    Used as the Frank-Wolfe starting point and as the explicit feasible
    witness for honestly generated constraint sets.
    """
    dim = n_c + 1
    eta = float(np.mean(np.abs(centers) / np.abs(spec.amplitudes))) ** 2
    if not (0.0 < eta <= 1.0):
        raise ParameterError(f"implied loss {eta} outside (0, 1]")
    kraus = _loss_kraus(eta, dim)
    blocks = np.empty((4, 4, dim, dim), dtype=complex)
    for i in range(4):
        vi = coherent_vector(spec.amplitudes[i], n_c)
        for j in range(4):
            vj = coherent_vector(spec.amplitudes[j], n_c)
            x = np.outer(vi, vj.conj())
            blocks[i, j] = sum(k @ x @ k.conj().T for k in kraus)
    if nbar > 0:
        pts, wts = _additive_noise_points(nbar)
        disp = [displacement_matrix(b, dim) for b in pts]
        noisy = np.zeros_like(blocks)
        for d, wt in zip(disp, wts):
            dh = d.conj().T
            for i in range(4):
                for j in range(4):
                    noisy[i, j] += wt * (d @ blocks[i, j] @ dh)
        blocks = noisy
    rho = np.zeros((4 * dim, 4 * dim), dtype=complex)
    probs = spec.probabilities
    for i in range(4):
        for j in range(4):
            w = math.sqrt(probs[i] * probs[j])
            rho[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = w * blocks[i, j]
    return 0.5 * (rho + rho.conj().T)
