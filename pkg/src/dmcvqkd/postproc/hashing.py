"""Universal hashing: GF(2^b) polynomial verification tags and Toeplitz
privacy amplification.

Field arithmetic is polynomial arithmetic over GF(2) modulo a fixed
published low-weight irreducible; the default 96-bit field uses
x^96 + x^10 + x^9 + x^6 + 1, and the 8-bit field (exhaustive testing only)
uses x^8 + x^4 + x^3 + x + 1.  Bit strings are handled as Python integers,
with cached byte-indexed multiplication tables so tags over half-megabit
blocks stay cheap.
"""

from __future__ import annotations

import hashlib
import math
from functools import lru_cache

import numpy as np

from ..core import ParameterError

__all__ = ["GF2Field", "poly_hash_tag", "poly_hash_verify", "eps_ec_bound",
           "toeplitz_pa", "toeplitz_generator", "toeplitz_apply"]

_IRREDUCIBLE = {
    8: (1 << 8) | 0b11011,                       # x^8+x^4+x^3+x+1
    32: (1 << 32) | (1 << 7) | (1 << 3) | (1 << 2) | 1,
    64: (1 << 64) | (1 << 4) | (1 << 3) | (1 << 1) | 1,
    96: (1 << 96) | (1 << 10) | (1 << 9) | (1 << 6) | 1,
}


class GF2Field:
    """GF(2^width) with multiplication by a fixed field point via tables."""

    def __init__(self, width: int):
        if width not in _IRREDUCIBLE:
            raise ParameterError(f"no modulus on file for width {width}")
        self.width = width
        self.modulus = _IRREDUCIBLE[width]
        self.mask = (1 << width) - 1

    def mul(self, a: int, b: int) -> int:
        """Carry-less multiply mod the field polynomial."""
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a >> self.width:
                a ^= self.modulus
        return r


@lru_cache(maxsize=32)
def _mul_tables(width: int, point: int) -> tuple:
    """Byte-indexed tables for y -> point*y, one per byte lane."""
    field = GF2Field(width)
    nbytes = (width + 7) // 8
    return tuple(
        tuple(field.mul(point, byte << (8 * lane)) for byte in range(256))
        for lane in range(nbytes))


def _field_point(width: int, seed: int) -> int:
    """Deterministic evaluation point from the shared seed."""
    digest = hashlib.sha256(f"polyhash:{width}:{seed}".encode()).digest()
    return int.from_bytes(digest, "big") & ((1 << width) - 1)


def _bits_to_int(bits: np.ndarray) -> int:
    """Integer with bit t equal to bits[t]."""
    n = len(bits)
    if n == 0:
        return 0
    return int.from_bytes(np.packbits(bits[::-1]).tobytes(), "big") \
        >> ((-n) % 8)


def _coefficients(bits: np.ndarray, width: int) -> list[int]:
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % width
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return [_bits_to_int(bits[i:i + width])
            for i in range(0, len(bits), width)]


def poly_hash_tag(bits: np.ndarray, b_EV: int, seed: int) -> int:
    """Polynomial-evaluation tag: sum_i c_i r^(k-i) at a seeded point r.

    Equal blocks give equal tags; distinct blocks collide on at most
    ceil(L/b_EV) of the 2^b_EV field points.
    """
    r = _field_point(b_EV, seed)
    tables = _mul_tables(b_EV, r)
    nbytes = (b_EV + 7) // 8

    def mul_r(y: int) -> int:
        acc = 0
        for lane in range(nbytes):
            byte = (y >> (8 * lane)) & 0xFF
            if byte:
                acc ^= tables[lane][byte]
        return acc

    tag = 0
    for c in _coefficients(bits, b_EV):
        tag = mul_r(tag) ^ c
    return mul_r(tag)


def poly_hash_verify(block_a: np.ndarray, block_b: np.ndarray, b_EV: int,
                     seed: int) -> tuple[bool, int]:
    """Compare two blocks through their polynomial tags.

    Returns (match, tag_of_a); lengths must agree.
    """
    block_a = np.asarray(block_a, dtype=np.uint8)
    block_b = np.asarray(block_b, dtype=np.uint8)
    if block_a.shape != block_b.shape:
        raise ParameterError("blocks must have equal length")
    tag_a = poly_hash_tag(block_a, b_EV, seed)
    tag_b = poly_hash_tag(block_b, b_EV, seed)
    return tag_a == tag_b, tag_a


def eps_ec_bound(b_EV: int, L_ldpc: int, n_kept_bits: float) -> float:
    """2^-b_EV * ceil(L/b_EV) * ceil(n_kept/L): the error-verification
    failure budget for the whole corrected string."""
    if n_kept_bits <= 0:
        return 0.0
    return 2.0 ** (-b_EV) * math.ceil(L_ldpc / b_EV) \
        * math.ceil(n_kept_bits / L_ldpc)


def toeplitz_generator(seed: int, n_in: int, out_len: int) -> np.ndarray:
    """Seeded diagonal-generator string of n_in + out_len - 1 bits."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 4, 0, 0]))
    return rng.integers(0, 2, size=n_in + out_len - 1, dtype=np.uint8)


def toeplitz_apply(g: np.ndarray, bits: np.ndarray,
                   out_len: int) -> np.ndarray:
    """T @ bits with T[i, j] = g[i - j + n - 1]; parities via bigints."""
    bits = np.asarray(bits, dtype=np.uint8)
    g = np.asarray(g, dtype=np.uint8)
    n = len(bits)
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    if len(g) != n + out_len - 1:
        raise ParameterError("generator string has wrong length")
    b_int = _bits_to_int(bits)
    h_int = _bits_to_int(g[::-1])      # bit u holds g[n + out_len - 2 - u]
    mask = (1 << n) - 1
    out = np.empty(out_len, dtype=np.uint8)
    for i in range(out_len):
        row = (h_int >> (out_len - 1 - i)) & mask
        out[i] = (row & b_int).bit_count() & 1
    return out


def toeplitz_pa(bits: np.ndarray, out_len: int, seed: int) -> np.ndarray:
    """Toeplitz hashing to out_len bits.

    Both sides derive the Toeplitz matrix from the shared seed, so
    identical seeds give identical keys.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if out_len > len(bits):
        raise ParameterError(
            f"out_len {out_len} exceeds input length {len(bits)}")
    g = toeplitz_generator(seed, len(bits), out_len)
    return toeplitz_apply(g, bits, out_len)
