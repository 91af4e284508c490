"""Correction terms of the finite-size key-length statement."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..core import ParameterError

__all__ = ["delta_w", "delta_aep", "key_length", "KeyLengthResult"]


def _h2(x: float) -> float:
    """Binary entropy, base 2."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def delta_w(w: float, card_Z: int = 4) -> float:
    """Dimension-reduction penalty
    sqrt(w) log2|Z| + (1 + sqrt(w)) h(sqrt(w)/(1 + sqrt(w)))."""
    if not (0.0 <= w <= 1.0):
        raise ParameterError("w must lie in [0, 1]")
    if w == 0.0:
        return 0.0
    sw = math.sqrt(w)
    return sw * math.log2(card_Z) + (1.0 + sw) * _h2(sw / (1.0 + sw))


def delta_aep(eps_bar: float, n: int, rank_X: int = 4) -> float:
    """Asymptotic-equipartition correction
    2 log2(rank + 3) sqrt(log2(2/eps_bar) / n)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not (0.0 < eps_bar < 1.0):
        raise ParameterError("eps_bar must lie in (0, 1)")
    return 2.0 * math.log2(rank_X + 3) * math.sqrt(math.log2(2.0 / eps_bar) / n)


@dataclass(frozen=True)
class KeyLengthResult:
    length: int
    abort: bool
    skf: float        # ell / N, bits per symbol


def key_length(qre_lower: float, delta_w_val: float, delta_aep_val: float,
               ec_leak_per_symbol: float, n: int, N: int, n_blocks: int,
               b_hash: int, b_PA: int) -> KeyLengthResult:
    """Secure key length in bits.

    ell = floor(n [qre - Delta(w) - delta(eps_bar) - EC_leak]
                - n_blocks b_hash - b_PA)

    with EC_leak normalized per key round (the n = N - k_T rounds).
    Negative lengths clamp to 0 with the abort flag set.
    """
    if n > N:
        raise ParameterError("n cannot exceed N")
    for name, v in (("qre_lower", qre_lower), ("delta_w", delta_w_val),
                    ("delta_aep", delta_aep_val),
                    ("ec_leak", ec_leak_per_symbol)):
        if not math.isfinite(v):
            raise ParameterError(f"{name} must be finite")
    raw = n * (qre_lower - delta_w_val - delta_aep_val - ec_leak_per_symbol) \
        - n_blocks * b_hash - b_PA
    length = math.floor(raw)
    if length <= 0:
        return KeyLengthResult(0, True, 0.0)
    return KeyLengthResult(length, False, length / N)
