"""Classical post-processing: LDPC reverse reconciliation on a BSC,
leakage/efficiency accounting, polynomial-hash error verification and
Toeplitz privacy amplification."""

from .ldpc import LdpcCode, bp_decode, bp_decode_batch, ldpc_construct, syndrome
from .hashing import eps_ec_bound, poly_hash_tag, poly_hash_verify, toeplitz_pa
from .reconcile import (
    ReconciliationReport,
    avg_beta,
    bsc_crossover_from_snr,
    ec_leak,
    i_ab_bits,
    reconcile_blocks,
)

__all__ = [
    "LdpcCode",
    "ldpc_construct",
    "syndrome",
    "bp_decode",
    "bp_decode_batch",
    "poly_hash_tag",
    "poly_hash_verify",
    "eps_ec_bound",
    "toeplitz_pa",
    "ReconciliationReport",
    "reconcile_blocks",
    "ec_leak",
    "avg_beta",
    "bsc_crossover_from_snr",
    "i_ab_bits",
]
