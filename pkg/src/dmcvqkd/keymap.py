"""Bob's key map with radial postselection, and derived statistics.

Discretization acts on the amplitude form gamma = (q + ip)/sqrt(2) of each
outcome: quadrant symbol by arg(gamma) with lower-inclusive angular
boundaries, kept iff delta_r <= |gamma| <= m_amp (both radial ends
inclusive), otherwise the discard symbol.  m_amp is the detection limit on
the amplitude scale (M/sqrt(2) for a detection range M on the (q, p)
scale).

Bit labelling for reconciliation is Gray-coded: one sign bit per
quadrature, so the two bits of a QPSK symbol are independent BSC uses.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .core import ParameterError
from .simulator import SymbolFrame
from .statproc import EstimationError

__all__ = [
    "DISCARD",
    "KeyString",
    "key_map",
    "map_frame",
    "snr_estimate",
    "symbols_to_bits",
    "labels_to_bits",
]

DISCARD = 7  # packed code for the discard symbol
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KeyString:
    """Sequence over {0,1,2,3,DISCARD} with its discard bookkeeping."""

    symbols: np.ndarray  # uint8, DISCARD marks discarded rounds

    def __post_init__(self):
        sym = np.ascontiguousarray(self.symbols, dtype=np.uint8)
        object.__setattr__(self, "symbols", sym)
        if sym.size and not np.all((sym <= 3) | (sym == DISCARD)):
            raise ParameterError("symbols must lie in {0,1,2,3} or DISCARD")

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def kept_mask(self) -> np.ndarray:
        return self.symbols != DISCARD

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.kept_mask))

    @property
    def r_perp(self) -> float:
        """Discard fraction; 0 by convention for an empty string."""
        if len(self) == 0:
            return 0.0
        return 1.0 - self.kept_count / len(self)

    def pack(self) -> bytes:
        """Serialize as a count header plus packed 3-bit codes."""
        n = len(self)
        bits = np.unpackbits(
            self.symbols.reshape(-1, 1), axis=1, count=8)[:, 5:]
        payload = np.packbits(bits.reshape(-1))
        return struct.pack("<Q", n) + payload.tobytes()

    @classmethod
    def unpack(cls, blob: bytes) -> "KeyString":
        (n,) = struct.unpack("<Q", blob[:8])
        bits = np.unpackbits(np.frombuffer(blob[8:], dtype=np.uint8))
        bits = bits[: 3 * n].reshape(n, 3)
        sym = (bits[:, 0] << 2 | bits[:, 1] << 1 | bits[:, 2]).astype(np.uint8)
        return cls(sym)


def key_map(gamma: complex, delta_r: float, m_amp: float) -> int:
    """Discretize one amplitude-form outcome.

    Returns the quadrant 0..3 for kept outcomes, DISCARD otherwise.
    Angular intervals are [k pi/2, (k+1) pi/2); the radial window is
    inclusive on both ends.
    """
    if delta_r >= m_amp:
        raise ParameterError("delta_r must be < m_amp")
    r = abs(gamma)
    if r < delta_r or r > m_amp:
        return DISCARD
    ang = math.atan2(gamma.imag, gamma.real) % _TWO_PI
    return int(ang // (math.pi / 2.0)) % 4


def map_frame(frame: SymbolFrame, delta_r: float, m_amp: float) -> KeyString:
    """Element-wise key map over a frame of key-round outcomes."""
    if delta_r >= m_amp:
        raise ParameterError("delta_r must be < m_amp")
    if len(frame) == 0:
        return KeyString(np.empty(0, dtype=np.uint8))
    gamma = frame.gamma
    r = np.abs(gamma)
    ang = np.mod(np.arctan2(gamma.imag, gamma.real), _TWO_PI)
    sym = (ang // (math.pi / 2.0)).astype(np.uint8) % 4
    sym[(r < delta_r) | (r > m_amp)] = DISCARD
    return KeyString(sym)


def snr_estimate(frame: SymbolFrame, delta_r: float, m_amp: float,
                 min_kept: int = 100) -> float:
    """Signal-to-noise ratio over postselected outcomes with known labels.

    Power of the conditional mean of gamma given the label, divided by the
    mean squared deviation from it, both computed on kept symbols only.
    Returns inf on a zero-noise channel (flagged saturation).
    """
    gamma = frame.gamma
    r = np.abs(gamma)
    kept = (r >= delta_r) & (r <= m_amp)
    if int(kept.sum()) < min_kept:
        raise EstimationError(
            f"too few kept symbols for SNR ({int(kept.sum())} < {min_kept})")
    sig = 0.0
    noise = 0.0
    total = 0
    for i in range(4):
        sel = kept & (frame.labels == i)
        cnt = int(sel.sum())
        if cnt == 0:
            continue
        g = gamma[sel]
        mu = g.mean()
        sig += cnt * abs(mu) ** 2
        noise += float(np.sum(np.abs(g - mu) ** 2))
        total += cnt
    sig /= total
    noise /= total
    if noise == 0.0:
        return math.inf
    return sig / noise


def symbols_to_bits(symbols: np.ndarray) -> np.ndarray:
    """Gray-coded bits of kept symbols: (sign q < 0, sign p < 0) per symbol.

    Quadrants 0,1,2,3 map to (0,0), (1,0), (1,1), (0,1); discards must be
    filtered out beforehand.
    """
    sym = np.asarray(symbols)
    if sym.size and np.any(sym > 3):
        raise ParameterError("discard symbols cannot be bit-encoded")
    bq = ((sym == 1) | (sym == 2)).astype(np.uint8)
    bp = ((sym == 2) | (sym == 3)).astype(np.uint8)
    out = np.empty(2 * len(sym), dtype=np.uint8)
    out[0::2] = bq
    out[1::2] = bp
    return out


def labels_to_bits(labels: np.ndarray) -> np.ndarray:
    """Alice-side bit encoding; labels share the quadrant convention."""
    return symbols_to_bits(labels)
