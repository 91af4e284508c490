"""Symbol-level stand-in for the optical layer.

QPSK source, Gaussian loss/noise channel and trusted heterodyne detector.
The channel law is i.i.d. Gaussian and is used for data generation only;
nothing downstream of the statistical tests assumes it.

For a prepared amplitude a_j the stored outcome y = q + i p is such that
gamma = y/sqrt(2) is a circular Gaussian with

    mean                 sqrt(eta_D * eta_ch) * a_j
    per-component var    (1 + eta_D*eta_ch*xi/2 + nu_el) / 2

i.e. the vacuum-plus-heterodyne unit 1/2 with trusted detector noise on
top.  Randomness comes from counter-based Philox streams keyed on
(seed, chunk); frames are bit-identical for a fixed seed regardless of how
generation is chunked across workers.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ParameterError

__all__ = [
    "CalibrationError",
    "EmptyFrameError",
    "ConstellationSpec",
    "ChannelModel",
    "SymbolFrame",
    "qpsk_amplitudes",
    "prepare",
    "transmit_measure",
    "calibrate_b2b",
]

_SQRT2 = math.sqrt(2.0)
_CHUNK = 1 << 16  # symbols per Philox stream; fixed so results are worker-count independent

_MAGIC = b"DMCV"
_VERSION = 1
_RECORD = np.dtype([("label", "u1"), ("q", "<f8"), ("p", "<f8")])


class EmptyFrameError(ValueError):
    """Zero-length frame requested or supplied."""


class CalibrationError(RuntimeError):
    """Back-to-back calibration failed its preconditions."""


def qpsk_amplitudes(alpha_mag: float) -> np.ndarray:
    """The four QPSK amplitudes |alpha| e^{i(2k+1)pi/4}, k = 0..3."""
    phases = (2 * np.arange(4) + 1) * np.pi / 4.0
    return alpha_mag * np.exp(1j * phases)


@dataclass(frozen=True)
class ConstellationSpec:
    """Four-point constellation with prior probabilities (uniform by default)."""

    amplitudes: np.ndarray
    probabilities: np.ndarray = field(
        default_factory=lambda: np.full(4, 0.25))

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        probs = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "probabilities", probs)
        if amps.shape != (4,) or probs.shape != (4,):
            raise ParameterError("constellation needs exactly 4 points")
        if abs(probs.sum() - 1.0) > 1e-12 or np.any(probs < 0):
            raise ParameterError("probabilities must be nonnegative and sum to 1")
        mags = np.abs(amps)
        if mags.max() - mags.min() > 1e-9 * max(mags.max(), 1.0):
            raise ParameterError("QPSK amplitudes must share a common magnitude")

    @classmethod
    def qpsk(cls, alpha_mag: float) -> "ConstellationSpec":
        return cls(qpsk_amplitudes(alpha_mag))


@dataclass(frozen=True)
class ChannelModel:
    """Gaussian loss/noise channel plus trusted detector parameters."""

    eta_ch: float
    xi: float
    eta_D: float
    nu_el: float

    def __post_init__(self):
        if not (0.0 < self.eta_ch <= 1.0) or not (0.0 < self.eta_D <= 1.0):
            raise ParameterError("eta_ch and eta_D must lie in (0, 1]")
        if self.xi < 0 or self.nu_el < 0:
            raise ParameterError("xi and nu_el must be >= 0")

    @property
    def quad_var(self) -> float:
        """Per-quadrature variance of the stored (q, p) outcomes."""
        return 1.0 + self.eta_D * self.eta_ch * self.xi / 2.0 + self.nu_el

    @property
    def mean_scale(self) -> float:
        """Amplitude attenuation sqrt(eta_D * eta_ch)."""
        return math.sqrt(self.eta_D * self.eta_ch)


@dataclass(frozen=True)
class SymbolFrame:
    """Alice's labels and Bob's heterodyne outcomes in natural units."""

    labels: np.ndarray   # uint8 in {0..3}
    q: np.ndarray        # float64
    p: np.ndarray        # float64

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        q = np.ascontiguousarray(self.q, dtype=np.float64)
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        if not (len(labels) == len(q) == len(p)):
            raise ParameterError("labels and outcomes must have equal length")
        if labels.size and labels.max() > 3:
            raise ParameterError("labels must lie in {0,1,2,3}")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def y(self) -> np.ndarray:
        return self.q + 1j * self.p

    @property
    def gamma(self) -> np.ndarray:
        """Amplitude-form outcomes (q + ip)/sqrt(2)."""
        return (self.q + 1j * self.p) / _SQRT2

    def subset(self, idx: np.ndarray) -> "SymbolFrame":
        return SymbolFrame(self.labels[idx], self.q[idx], self.p[idx])

    def save(self, path) -> None:
        rec = np.empty(len(self), dtype=_RECORD)
        rec["label"], rec["q"], rec["p"] = self.labels, self.q, self.p
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<HQ", _VERSION, len(self)))
            fh.write(rec.tobytes())

    @classmethod
    def load(cls, path) -> "SymbolFrame":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise ParameterError(f"bad frame magic {magic!r}")
            version, count = struct.unpack("<HQ", fh.read(10))
            if version != _VERSION:
                raise ParameterError(f"unsupported frame version {version}")
            rec = np.frombuffer(fh.read(count * _RECORD.itemsize), dtype=_RECORD)
        if len(rec) != count:
            raise ParameterError("truncated frame file")
        return cls(rec["label"].copy(), rec["q"].copy(), rec["p"].copy())


def _stream(seed: int, chunk_index: int, purpose: int) -> np.random.Generator:
    # Philox keyed on (seed, purpose, chunk): counter-based, so any chunk's
    # stream can be opened independently of the others.
    return np.random.Generator(np.random.Philox(key=[seed, purpose, chunk_index, 0]))


def _chunk_ranges(n: int):
    for ci, start in enumerate(range(0, n, _CHUNK)):
        yield ci, start, min(start + _CHUNK, n)


def prepare(n: int, spec: ConstellationSpec, seed: int) -> np.ndarray:
    """Draw n labels from the constellation prior; deterministic per seed."""
    if n < 1:
        raise EmptyFrameError("cannot prepare an empty frame")
    out = np.empty(n, dtype=np.uint8)
    cdf = np.cumsum(spec.probabilities)
    cdf[-1] = 1.0
    for ci, a, b in _chunk_ranges(n):
        u = _stream(seed, ci, purpose=1).random(b - a)
        out[a:b] = np.searchsorted(cdf, u, side="right").astype(np.uint8)
    return out


def _measure_chunk(labels, spec, model, seed, ci, a, b, q, p):
    rng = _stream(seed, ci, purpose=2)
    amps = spec.amplitudes[labels[a:b]]
    mean_gamma = model.mean_scale * amps
    sigma_comp = math.sqrt(model.quad_var / 2.0)  # per gamma component
    noise = rng.normal(0.0, sigma_comp, size=(b - a, 2))
    gq = mean_gamma.real + noise[:, 0]
    gp = mean_gamma.imag + noise[:, 1]
    q[a:b] = _SQRT2 * gq
    p[a:b] = _SQRT2 * gp


def transmit_measure(labels: np.ndarray, spec: ConstellationSpec,
                     model: ChannelModel, seed: int,
                     threads: int = 1) -> SymbolFrame:
    """Push labelled symbols through the channel and heterodyne detector."""
    labels = np.asarray(labels, dtype=np.uint8)
    n = len(labels)
    if n == 0:
        raise EmptyFrameError("empty label sequence")
    q = np.empty(n)
    p = np.empty(n)
    ranges = list(_chunk_ranges(n))
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futs = [ex.submit(_measure_chunk, labels, spec, model, seed, ci, a, b, q, p)
                    for ci, a, b in ranges]
            for f in futs:
                f.result()
    else:
        for ci, a, b in ranges:
            _measure_chunk(labels, spec, model, seed, ci, a, b, q, p)
    return SymbolFrame(labels, q, p)


def calibrate_b2b(spec: ConstellationSpec, model: ChannelModel,
                  n: int, seed: int) -> float:
    """Back-to-back amplitude calibration.

    Runs the source into the detector with the channel bypassed
    (eta_ch = 1) and recovers the mean amplitude per constellation point via
    the mean-quadrature estimator.  Converges to sqrt(eta_D)*|alpha|: the
    returned value is quoted at the detector, under the trusted-detector
    convention; divide by sqrt(eta_D) for the amplitude in Alice's lab.
    """
    if n < 10_000:
        raise CalibrationError(f"need at least 1e4 samples, got {n}")
    b2b = ChannelModel(eta_ch=1.0, xi=model.xi, eta_D=model.eta_D,
                       nu_el=model.nu_el)
    labels = prepare(n, spec, seed)
    frame = transmit_measure(labels, spec, b2b, seed + 1)
    gamma = frame.gamma
    mags = []
    for i in range(4):
        sel = frame.labels == i
        if not np.any(sel):
            raise CalibrationError(f"constellation point {i} unsampled")
        mags.append(abs(gamma[sel].mean()))
    return float(np.mean(mags))
