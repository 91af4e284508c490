"""Reverse reconciliation driver and leakage/efficiency accounting.

Alice corrects her bit string toward Bob's key-mapped string: Bob sends
the syndrome of each block, Alice runs syndrome decoding on the combined
syndrome (her bits xor the error pattern reproduce Bob's), and the result
is checked with a polynomial hash tag.  Failed blocks are disclosed by Bob
and excluded from the privacy-amplification input; their leakage is capped
at the block's contained information.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ..core import ParameterError
from .hashing import poly_hash_tag
from .ldpc import LdpcCode, bp_decode_batch, syndrome

__all__ = [
    "ReconciliationReport",
    "reconcile_blocks",
    "ec_leak",
    "avg_beta",
    "bsc_crossover_from_snr",
    "i_ab_bits",
]


def bsc_crossover_from_snr(snr: float) -> float:
    """BSC crossover from the estimated SNR: p = Q(sqrt(SNR)).

    One sign decision per quadrature on kept symbols; Q is the standard
    Gaussian tail.
    """
    if snr < 0:
        raise ParameterError("SNR must be >= 0")
    return float(norm.sf(math.sqrt(snr)))


def _h2(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def i_ab_bits(p: float) -> float:
    """Per-bit BSC mutual information 1 - h(p)."""
    return 1.0 - _h2(p)


def ec_leak(B_cor: int, B_fail: int, R: float, qre: float, delta_w_val: float,
            delta_aep_val: float, r_perp: float) -> float:
    """Error-correction leakage in bits per key round.

    Per reconciled bit, corrected blocks leak their syndrome fraction
    (1 - R); failed (disclosed) blocks leak everything they contain, which
    cannot exceed 1 bit per bit and is bounded by the per-bit share of
    (QRE - Delta(w) - delta(eps_bar)).  Two bits per kept QPSK symbol and
    zero for discarded rounds gives the per-symbol normalization
    2 (1 - r_perp).
    """
    total = B_cor + B_fail
    if total < 1:
        raise ParameterError("need at least one block")
    if not (0.0 <= r_perp < 1.0):
        raise ParameterError("r_perp must lie in [0, 1)")
    f_cor = B_cor / total
    f_fail = B_fail / total
    info_per_bit = (qre - delta_w_val - delta_aep_val) / (2.0 * (1.0 - r_perp))
    cap = min(1.0, max(0.0, info_per_bit))
    leak_per_bit = f_cor * (1.0 - R) + f_fail * cap
    return 2.0 * (1.0 - r_perp) * leak_per_bit


def avg_beta(rates: np.ndarray, i_ab: np.ndarray) -> float:
    """Mean reconciliation efficiency beta_k = R_k / I_AB,k.

    Failed (and disclosed) blocks enter with code rate zero; blocks with
    nonpositive mutual information are excluded with a warning.
    """
    rates = np.asarray(rates, dtype=float)
    i_ab = np.asarray(i_ab, dtype=float)
    if rates.shape != i_ab.shape or rates.size == 0:
        raise ParameterError("need matching nonempty rate/I_AB arrays")
    good = i_ab > 0
    if not np.all(good):
        warnings.warn(f"excluding {int((~good).sum())} blocks with "
                      "nonpositive mutual information")
    if not np.any(good):
        raise ParameterError("no blocks with positive mutual information")
    return float(np.mean(rates[good] / i_ab[good]))


@dataclass
class ReconciliationReport:
    """Per-run reconciliation outcome and its wire-level accounting."""

    B_cor: int
    B_fail: int
    code_rate: float
    crossover: float
    i_ab_per_block: list = field(default_factory=list)
    rate_per_block: list = field(default_factory=list)
    syndrome_bits: int = 0
    disclosed_bits: int = 0
    leftover_bits: int = 0
    corrected: np.ndarray | None = None   # concatenated verified bits

    @property
    def B_tot(self) -> int:
        return self.B_cor + self.B_fail

    @property
    def fer(self) -> float:
        return self.B_fail / self.B_tot if self.B_tot else 0.0

    @property
    def beta_bar(self) -> float:
        return avg_beta(np.array(self.rate_per_block),
                        np.array(self.i_ab_per_block))

    def to_dict(self) -> dict:
        return {
            "B_cor": self.B_cor, "B_fail": self.B_fail, "B_tot": self.B_tot,
            "FER": self.fer, "code_rate": self.code_rate,
            "crossover": self.crossover,
            "beta_bar": self.beta_bar if self.B_tot else None,
            "syndrome_bits": self.syndrome_bits,
            "disclosed_bits": self.disclosed_bits,
            "leftover_bits": self.leftover_bits,
        }


def reconcile_blocks(alice_bits: np.ndarray, bob_bits: np.ndarray,
                     code: LdpcCode, crossover: float, b_EV: int,
                     verify_seed: int, max_iter: int = 200,
                     transcript=None) -> ReconciliationReport:
    """Run reverse reconciliation over whole blocks of the kept bits.

    Returns the report with Alice's verified bit string (Bob's string for
    failed, disclosed blocks is substituted so privacy amplification sees
    the surviving corrected blocks only).  Residual bits beyond the last
    whole block are dropped and counted.
    """
    alice_bits = np.asarray(alice_bits, dtype=np.uint8)
    bob_bits = np.asarray(bob_bits, dtype=np.uint8)
    if alice_bits.shape != bob_bits.shape:
        raise ParameterError("bit strings must have equal length")
    if not (0.0 < crossover < 0.5):
        raise ParameterError("crossover must lie in (0, 0.5)")
    L = code.L
    n_blocks = len(alice_bits) // L
    leftover = len(alice_bits) - n_blocks * L
    report = ReconciliationReport(0, 0, code.rate, crossover,
                                  leftover_bits=leftover)
    if n_blocks == 0:
        report.corrected = np.zeros(0, dtype=np.uint8)
        return report

    a = alice_bits[:n_blocks * L].reshape(n_blocks, L)
    b = bob_bits[:n_blocks * L].reshape(n_blocks, L)
    syn_b = syndrome(b, code)
    syn_a = syndrome(a, code)
    # decode the error pattern e with H e = syn_a ^ syn_b, prior p
    llr0 = math.log((1.0 - crossover) / crossover) * np.ones((n_blocks, L))
    err, ok, _ = bp_decode_batch(llr0, syn_a ^ syn_b, code, max_iter)
    i_ab = i_ab_bits(crossover)
    kept_blocks = []
    for k in range(n_blocks):
        if transcript is not None:
            transcript.syndrome(code_id=id(code) & 0xFFFFFFFF, block=k,
                                bits=syn_b[k])
        report.syndrome_bits += code.S
        corrected = (a[k] ^ err[k]) if ok[k] else None
        match = False
        if corrected is not None:
            match, tag = poly_hash_verify_pair(corrected, b[k], b_EV,
                                               verify_seed + k, transcript)
        if match:
            report.B_cor += 1
            report.rate_per_block.append(code.rate)
            report.i_ab_per_block.append(i_ab)
            kept_blocks.append(corrected)
        else:
            # reconciliation failed: Bob disclosed the block
            report.B_fail += 1
            report.rate_per_block.append(0.0)
            report.i_ab_per_block.append(i_ab)
            report.disclosed_bits += L
            if transcript is not None:
                transcript.disclosure(block=k, bits=b[k])
    report.corrected = np.concatenate(kept_blocks) if kept_blocks \
        else np.zeros(0, dtype=np.uint8)
    return report


def poly_hash_verify_pair(block_a: np.ndarray, block_b: np.ndarray,
                          b_EV: int, seed: int, transcript=None
                          ) -> tuple[bool, int]:
    """Verification exchange: both tags computed, Alice's sent on the wire."""
    tag_a = poly_hash_tag(block_a, b_EV, seed)
    tag_b = poly_hash_tag(block_b, b_EV, seed)
    if transcript is not None:
        transcript.verification(seed=seed, tag=tag_a, bits=b_EV)
    return tag_a == tag_b, tag_a
