"""Parameter records, unit conversions and the composable epsilon-budget arithmetic.

Unit conventions used throughout the package
--------------------------------------------
Measurement outcomes are stored in natural units (NU) as pairs (q, p) with
the *measured* vacuum variance equal to 1 per quadrature (the intrinsic
vacuum quadrature variance 1/2 plus the heterodyne vacuum unit 1/2).  The
amplitude form of an outcome is

    gamma = (q + i p) / sqrt(2),

which for an incoming coherent state |a> (ideal detector, lossless channel)
is distributed as a circular Gaussian with mean a and per-real-component
variance 1/2, so |gamma|^2 of vacuum is Exp(1).  All radial thresholds that
compare against coherent-state amplitudes (energy-test radius beta_test,
key-map window) act on gamma.  The detection limit M is quoted on the (q, p)
scale; the corresponding amplitude-scale limit is M / sqrt(2).

Shot-noise-unit (SNU) data enters only at ingestion, via ``snu_to_nu``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, asdict

__all__ = [
    "BudgetError",
    "InvalidSampleError",
    "ParameterError",
    "NuSample",
    "ProtocolParams",
    "EpsilonBudget",
    "snu_to_nu",
    "alpha_from_means",
    "epsilon_total",
    "b_pa_from_eps",
]


class ParameterError(ValueError):
    """Invalid protocol/physical parameter."""


class BudgetError(ValueError):
    """Epsilon-budget component out of range."""


class InvalidSampleError(ValueError):
    """Non-finite quadrature sample."""


@dataclass(frozen=True)
class NuSample:
    """A quadrature pair in natural units; complex form is y = q + i p."""

    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise InvalidSampleError(f"non-finite sample ({self.q}, {self.p})")

    @property
    def y(self) -> complex:
        return complex(self.q, self.p)

    @property
    def gamma(self) -> complex:
        """Amplitude form (q + i p)/sqrt(2)."""
        return complex(self.q, self.p) / math.sqrt(2.0)


def snu_to_nu(sample_snu: tuple[float, float]) -> NuSample:
    """Convert a quadrature pair from shot-noise units to natural units.

    Each component is divided by sqrt(2).
    """
    q, p = float(sample_snu[0]), float(sample_snu[1])
    if not (math.isfinite(q) and math.isfinite(p)):
        raise InvalidSampleError(f"non-finite SNU sample ({q}, {p})")
    return NuSample(q / math.sqrt(2.0), p / math.sqrt(2.0))


def alpha_from_means(mean_q: float, mean_p: float) -> complex:
    """Coherent amplitude from mean quadratures: (⟨q⟩ + i⟨p⟩)/sqrt(2)."""
    if not (math.isfinite(mean_q) and math.isfinite(mean_p)):
        raise InvalidSampleError(f"non-finite means ({mean_q}, {mean_p})")
    return complex(mean_q, mean_p) / math.sqrt(2.0)


def _check_prob(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise BudgetError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class EpsilonBudget:
    """Security-parameter ledger of all sub-protocols.

    eps_EC_max is the error-correction budget line (an upper bound; the
    achieved value depends on the run and is reported separately).
    """

    eps_PA: float
    eps_EC_max: float
    eps_ET: float
    eps_AT: float
    eps_bar: float
    eps_RNG: float

    def __post_init__(self):
        for f in fields(self):
            _check_prob(f.name, getattr(self, f.name))

    @property
    def eps_total(self) -> float:
        return epsilon_total(self)[0]


def epsilon_total(budget: EpsilonBudget) -> tuple[float, str]:
    """Total composable security parameter and the active branch of the max.

    eps = eps_RNG + eps_EC + max(eps_PA/2 + eps_bar, eps_ET + eps_AT)
    """
    secrecy_pa = 0.5 * budget.eps_PA + budget.eps_bar
    secrecy_test = budget.eps_ET + budget.eps_AT
    branch = "pa+smoothing" if secrecy_pa >= secrecy_test else "et+at"
    total = budget.eps_RNG + budget.eps_EC_max + max(secrecy_pa, secrecy_test)
    return total, branch


def b_pa_from_eps(eps_PA: float) -> int:
    """Privacy-amplification overhead in bits: ceil(2 log2(1/eps_PA))."""
    _check_prob("eps_PA", eps_PA)
    return math.ceil(2.0 * math.log2(1.0 / eps_PA))


_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ProtocolParams:
    """All protocol and physical parameters of a run in one validated record.

    M is the detection limit on the (q, p) scale; beta_test and delta_r are
    amplitude-scale radii (compared against |gamma|).  With ``tight`` set,
    beta_test is required to equal M/sqrt(2).
    """

    alpha_mag: float        # coherent-state amplitude |alpha|
    n_c: int                # photon-number cutoff
    M: float                # detection limit, NU on the (q,p) scale
    beta_test: float        # energy-test radius, amplitude scale
    delta_r: float          # postselection inner radius, amplitude scale
    r_T: float              # testing ratio k_T / N
    N_total: int            # total symbols
    l_T_frac: float         # allowed-outlier fraction l_T / k_T
    w: float                # weight outside the cutoff space
    t_F: float              # acceptance widening factor (multiples of mu)
    eta_D: float            # detector efficiency
    nu_el: float            # electronic noise, SNU per quadrature
    eta_ch: float           # channel transmittance
    xi: float               # excess noise, SNU, channel-input referred
    L_ldpc: int             # reconciliation block length, bits
    b_EV: int               # verification tag length, bits
    b_PA: int               # privacy-amplification overhead, bits
    tight: bool = False     # enforce beta_test == M/sqrt(2)

    def __post_init__(self):
        if self.alpha_mag < 0:
            raise ParameterError("alpha_mag must be >= 0")
        if self.n_c < 1:
            raise ParameterError("n_c must be >= 1")
        if self.M <= 0:
            raise ParameterError("M must be > 0")
        m_amp = self.M / _SQRT2
        if not (0.0 < self.beta_test <= m_amp * (1 + 1e-12)):
            raise ParameterError(
                f"beta_test must lie in (0, M/sqrt(2)] = (0, {m_amp:.6g}], got {self.beta_test}")
        if self.tight and abs(self.beta_test - m_amp) > 1e-12 * m_amp:
            raise ParameterError(
                f"tight mode requires beta_test == M/sqrt(2) = {m_amp:.12g}")
        if not (0.0 <= self.delta_r < m_amp):
            raise ParameterError("delta_r must lie in [0, M/sqrt(2))")
        for name in ("r_T", "l_T_frac", "eta_D", "eta_ch"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ParameterError(f"{name} must lie in (0, 1], got {v}")
        if self.r_T >= 1.0:
            raise ParameterError("r_T must be < 1")
        if not (0.0 <= self.w <= 1.0):
            raise ParameterError("w must lie in [0, 1]")
        if self.nu_el < 0 or self.xi < 0:
            raise ParameterError("nu_el and xi must be >= 0")
        if self.t_F < 0:
            raise ParameterError("t_F must be >= 0")
        if self.N_total < 1:
            raise ParameterError("N_total must be >= 1")
        for name in ("L_ldpc", "b_EV", "b_PA"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")

    @property
    def k_T(self) -> int:
        return int(round(self.r_T * self.N_total))

    @property
    def l_T(self) -> int:
        return int(math.floor(self.l_T_frac * self.k_T))

    @property
    def m_amp(self) -> float:
        """Detection limit on the amplitude scale, M/sqrt(2)."""
        return self.M / _SQRT2

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_mapping(cls, data: dict) -> "ProtocolParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ProtocolParams":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ParameterError("parameter file must hold a flat JSON object")
        return cls.from_mapping(data)
