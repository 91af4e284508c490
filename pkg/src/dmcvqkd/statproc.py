"""Statistics computed from the disclosed test symbols.

Energy Test and its epsilon, displaced-moment estimation, trusted-detector
conversion, channel estimators, and the Hoeffding-based Acceptance Test.

The displaced photon-number estimators work on the amplitude form
gamma = (q + ip)/sqrt(2) of the outcomes.  Heterodyne moments of gamma are
anti-normally ordered, so with centred samples gt = gamma - mean(gamma):

    <n_beta>    <- mean |gt|^2 - 1
    <n_beta^2>  <- mean |gt|^4 - 3 mean |gt|^2 + 1

The quartic expression is identical, term by term, to
 1/4 qt^4 + 1/2 qt^2 pt^2 + 1/4 pt^4 - 3/2 qt^2 - 3/2 pt^2 + 1
in the stored (q, p) components.  The first-moment estimator subtracts the
full heterodyne vacuum unit (mean|gt|^2 of vacuum is 1); this is the unique
choice under which a vacuum input gives 0, a trusted-noise-only channel
gives nu_el, and the trusted conversion below is the exact inverse of the
detector map n -> eta_D n + nu_el.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, rel_entr

from .core import ParameterError
from .simulator import SymbolFrame

__all__ = [
    "EstimationError",
    "TheoremConditionError",
    "InfeasibleWeightError",
    "EnergyTestSpec",
    "EnergyTestResult",
    "MomentEstimates",
    "AcceptanceSet",
    "AcceptanceResult",
    "run_energy_test",
    "energy_test_epsilon",
    "find_min_weight",
    "displaced_moments",
    "trusted_moments",
    "estimate_channel",
    "acceptance_mu",
    "observable_norms",
    "run_acceptance_test",
    "split_test_key",
]

_SQRT2 = math.sqrt(2.0)


class EstimationError(RuntimeError):
    """Not enough data for an estimator."""


class TheoremConditionError(ValueError):
    """Energy-test theorem applicability condition violated."""


class InfeasibleWeightError(RuntimeError):
    """No weight in (0, 1] reaches the requested epsilon target."""


# ---------------------------------------------------------------- energy test

def gamma_ratio(n_c: int, beta_test: float) -> float:
    """r = Gamma(n_c+1, 0) / Gamma(n_c+1, beta_test), upper incomplete gamma."""
    q = gammaincc(n_c + 1, beta_test)
    if q <= 0.0:
        raise ParameterError("Gamma(n_c+1, beta_test) underflowed to zero")
    return 1.0 / q


@dataclass(frozen=True)
class EnergyTestSpec:
    """Inputs of the Energy-Test theorem."""

    beta_test: float
    k_T: int
    l_T: int
    w: float
    n_c: int
    eps_ET: float

    def __post_init__(self):
        if self.beta_test <= 0:
            raise ParameterError("beta_test must be > 0")
        if self.k_T < 1 or self.l_T < 0:
            raise ParameterError("need k_T >= 1 and l_T >= 0")
        if not (0.0 <= self.w <= 1.0):
            raise ParameterError("w must lie in [0, 1]")
        if not (0.0 < self.eps_ET < 1.0):
            raise ParameterError("eps_ET must lie in (0, 1)")

    @property
    def r_gamma(self) -> float:
        return gamma_ratio(self.n_c, self.beta_test)

    def check_condition(self) -> None:
        if not self.l_T / self.k_T < self.w / self.r_gamma:
            raise TheoremConditionError(
                f"need l_T/k_T = {self.l_T / self.k_T:.3e} < w/r = "
                f"{self.w / self.r_gamma:.3e}")


@dataclass(frozen=True)
class EnergyTestResult:
    outliers: int
    l_T: int
    passed: bool

    def to_dict(self) -> dict:
        return {"outliers": self.outliers, "l_T": self.l_T, "pass": self.passed}


def run_energy_test(frame: SymbolFrame, spec: EnergyTestSpec) -> EnergyTestResult:
    """Count test symbols with |(q + ip)/sqrt(2)| > beta_test (strict).

    Pass iff the count does not exceed l_T; an abort is a result, not an
    error.
    """
    if len(frame) == 0:
        raise EstimationError("energy test needs a nonempty frame")
    outliers = int(np.count_nonzero(np.abs(frame.gamma) > spec.beta_test))
    return EnergyTestResult(outliers, spec.l_T, outliers <= spec.l_T)


def _kl_bits(a: float, y: float) -> float:
    """KL divergence of binary (1-a, a) from (1-y, y), base 2."""
    return float(rel_entr(a, y) + rel_entr(1.0 - a, 1.0 - y)) / math.log(2.0)


def energy_test_epsilon(spec: EnergyTestSpec) -> float:
    """Failure bound (l_T + 1) * 2^(-k_T D(P_{l_T} || Q_{w/r}))."""
    spec.check_condition()
    y = spec.w / spec.r_gamma
    d = _kl_bits(spec.l_T / spec.k_T, y)
    return (spec.l_T + 1) * 2.0 ** (-spec.k_T * d)


def find_min_weight(n_c: int, beta_test: float, l_T_frac: float, k_T: int,
                    eps_ET_target: float, rel_tol: float = 1e-12) -> float:
    """Smallest weight w whose Energy-Test epsilon meets the target.

    Bisection on w; the theorem condition l_T/k_T < w/r holds at the
    returned value, and energy_test_epsilon(w) <= eps_ET_target.
    """
    if not (0.0 < eps_ET_target < 1.0):
        raise ParameterError("target must lie in (0, 1)")
    r = gamma_ratio(n_c, beta_test)
    l_T = int(math.floor(l_T_frac * k_T))
    a = l_T / k_T

    def eps_at(w: float) -> float:
        y = w / r
        return (l_T + 1) * 2.0 ** (-k_T * _kl_bits(a, y))

    lo = a * r  # theorem-condition boundary: divergence 0, eps = l_T + 1
    hi = min(1.0, r * (1.0 - 1e-15)) if r > 1.0 else 1.0
    if eps_at(hi) > eps_ET_target:
        raise InfeasibleWeightError(
            f"no w in (0, 1] reaches eps_ET <= {eps_ET_target:g}")
    if (l_T + 1) <= eps_ET_target:
        # any weight above the condition boundary already passes
        return lo * (1.0 + rel_tol) if lo > 0 else rel_tol
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= a * r:
            lo = mid
            continue
        if eps_at(mid) <= eps_ET_target:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------- moment estimators

@dataclass(frozen=True)
class MomentEstimates:
    """Per-constellation-point displaced photon-number moments.

    Slightly negative second moments at finite samples are recorded as-is.
    """

    n_nsy: np.ndarray             # noisy first moments, shape (4,)
    n_sq_nsy: np.ndarray          # noisy second moments
    n_tr: np.ndarray              # trusted first moments
    n_sq_tr: np.ndarray           # trusted second moments
    counts: np.ndarray            # k_T^(i), shape (4,)
    displacement_centers: np.ndarray  # beta_i = (qbar + i pbar)/sqrt(2)

    def to_dict(self) -> dict:
        return {
            "n_nsy": self.n_nsy.tolist(),
            "n_sq_nsy": self.n_sq_nsy.tolist(),
            "n_tr": self.n_tr.tolist(),
            "n_sq_tr": self.n_sq_tr.tolist(),
            "counts": self.counts.tolist(),
            "displacement_centers": [[c.real, c.imag]
                                     for c in self.displacement_centers],
        }


def displaced_moments(frame: SymbolFrame) -> MomentEstimates:
    """Noisy displaced moments from a disclosed test frame.

    Centres each constellation point on its sample mean, then evaluates the
    anti-normally-ordered estimators described in the module docstring.
    Trusted fields are left equal to the noisy ones; apply trusted_moments
    to fill them in.
    """
    n_nsy = np.empty(4)
    n_sq = np.empty(4)
    counts = np.empty(4, dtype=np.int64)
    centers = np.empty(4, dtype=complex)
    gamma = frame.gamma
    for i in range(4):
        g = gamma[frame.labels == i]
        if len(g) < 2:
            raise EstimationError(f"constellation point {i} has <2 samples")
        c = g.mean()
        gt2 = np.abs(g - c) ** 2
        m2 = gt2.mean()
        m4 = (gt2 * gt2).mean()
        centers[i] = c
        counts[i] = len(g)
        n_nsy[i] = m2 - 1.0
        n_sq[i] = m4 - 3.0 * m2 + 1.0
    return MomentEstimates(n_nsy, n_sq, n_nsy.copy(), n_sq.copy(),
                           counts, centers)


def trusted_moments(noisy: MomentEstimates, eta_D: float,
                    nu_el: float) -> MomentEstimates:
    """Remove the trusted detector from the noisy moments.

    n_tr    = (n_nsy - nu_el) / eta_D
    n_sq_tr = [n_sq_nsy - 2 nu_el^2 - nu_el
               - (4 nu_el + 1 - eta_D)(n_nsy - nu_el)] / eta_D^2
    """
    if eta_D <= 0:
        raise ParameterError("eta_D must be > 0")
    n_tr = (noisy.n_nsy - nu_el) / eta_D
    n_sq_tr = (noisy.n_sq_nsy - 2.0 * nu_el ** 2 - nu_el
               - (4.0 * nu_el + 1.0 - eta_D) * (noisy.n_nsy - nu_el)) / eta_D ** 2
    return MomentEstimates(noisy.n_nsy, noisy.n_sq_nsy, n_tr, n_sq_tr,
                           noisy.counts, noisy.displacement_centers)


def estimate_channel(moments: MomentEstimates, alpha_b2b: float,
                     eta_D: float) -> tuple[float, float, np.ndarray]:
    """Channel transmittance and excess noise from test-symbol statistics.

    alpha_b2b is the calibrate_b2b output (amplitude at the detector,
    sqrt(eta_D)|alpha|).  The received amplitude per point is the modulus
    of the displacement centre; both are backpropagated through the
    detector, so eta_ch = beta_rec^2 / alpha_b2b^2 with the sqrt(eta_D)
    factors cancelling.  xi = 2 nbar / eta_ch from the trusted moments,
    with a per-point variant as the third return value.
    """
    if alpha_b2b <= 0:
        raise ParameterError("alpha_b2b must be > 0")
    if eta_D <= 0:
        raise ParameterError("eta_D must be > 0")
    beta_rec = np.abs(moments.displacement_centers)
    eta_per_point = beta_rec ** 2 / alpha_b2b ** 2
    eta_ch = float(np.mean(beta_rec)) ** 2 / alpha_b2b ** 2
    nbar = float(np.mean(moments.n_tr))
    xi = 2.0 * nbar / eta_ch
    with np.errstate(divide="ignore", invalid="ignore"):
        xi_per_point = np.where(eta_per_point > 0,
                                2.0 * moments.n_tr / eta_per_point, np.inf)
    return eta_ch, xi, xi_per_point


# ------------------------------------------------------------ acceptance test

def observable_norms(M: float) -> tuple[float, float]:
    """Operator norms on the detection range: ||n|| = M^2 - 1/2,
    ||n^2|| = M^4 - M^2/2.  M on the (q, p) scale."""
    return M * M - 0.5, M ** 4 - 0.5 * M * M


def acceptance_mu(x_inf_norm: float, m_X: int, eps_AT: float,
                  psd: bool = False) -> float:
    """Hoeffding width mu_X; the PSD variant halves the 2x^2/m factor to
    x^2/(2m)."""
    if m_X < 1:
        raise ParameterError("m_X must be >= 1")
    if not (0.0 < eps_AT < 1.0):
        raise ParameterError("eps_AT must lie in (0, 1)")
    if x_inf_norm <= 0:
        raise ParameterError("operator norm must be > 0")
    log_term = math.log(2.0 / eps_AT)
    if psd:
        return math.sqrt(x_inf_norm ** 2 / (2.0 * m_X) * log_term)
    return math.sqrt(2.0 * x_inf_norm ** 2 / m_X * log_term)


_OBSERVABLES = tuple(f"n_beta{i}" for i in range(4)) + \
    tuple(f"n2_beta{i}" for i in range(4))


@dataclass(frozen=True)
class AcceptanceSet:
    """Pre-agreed acceptance region: |v_X - r_X| <= t_X per observable.

    Observables are the four displaced photon numbers followed by the four
    squared ones; centers come from a characterization run.
    """

    centers: np.ndarray   # r_X, shape (8,)
    mus: np.ndarray       # mu_X
    t_factor: float       # t_X = t_F * mu_X
    norms: np.ndarray     # ||X||_inf

    def __post_init__(self):
        for name in ("centers", "mus", "norms"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (8,):
                raise ParameterError(f"{name} must have shape (8,)")
        if np.any(self.mus <= 0):
            raise ParameterError("mu_X must be > 0")

    @property
    def widths(self) -> np.ndarray:
        return self.t_factor * self.mus

    @classmethod
    def build(cls, centers: np.ndarray, M: float, k_T: int, eps_AT: float,
              t_F: float) -> "AcceptanceSet":
        n1, n2 = observable_norms(M)
        norms = np.array([n1] * 4 + [n2] * 4)
        mus = np.array([acceptance_mu(x, k_T, eps_AT, psd=True) for x in norms])
        return cls(np.asarray(centers, dtype=float), mus, t_F, norms)


@dataclass(frozen=True)
class AcceptanceResult:
    passed: bool
    margins: dict[str, float]   # t_X - |v_X - r_X| per observable

    def to_dict(self) -> dict:
        return {"pass": self.passed, "margins": self.margins}


def run_acceptance_test(estimates: MomentEstimates,
                        accept: AcceptanceSet) -> AcceptanceResult:
    """Compare trusted moment estimates against the acceptance set.

    Pass iff |estimate - r_X| <= t_X for all eight observables (inclusive).
    """
    values = np.concatenate([estimates.n_tr, estimates.n_sq_tr])
    if values.shape != accept.centers.shape:
        raise ParameterError("estimates and acceptance set cover different observables")
    dev = np.abs(values - accept.centers)
    widths = accept.widths
    margins = {name: float(widths[i] - dev[i])
               for i, name in enumerate(_OBSERVABLES)}
    return AcceptanceResult(bool(np.all(dev <= widths)), margins)


# -------------------------------------------------------------- test sampling

def split_test_key(n: int, k_T: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform split of n rounds into k_T test and n-k_T key indices."""
    if not (0 < k_T < n):
        raise ParameterError("need 0 < k_T < n")
    rng = np.random.Generator(np.random.Philox(key=[seed, 3, 0, 0]))
    perm = rng.permutation(n)
    test = np.sort(perm[:k_T])
    key = np.sort(perm[k_T:])
    return test, key
