"""Protograph LDPC codes over Z_p: construction, encoding, BP decoding, EXIT analysis."""

from .bp import DecodeResult, bp_decode, bp_posteriors
from .code import (LiftedCode, dumps_base, dumps_code, lift, lift_for_length, loads_base,
                   loads_code)
from .exit import capacity_sigma, exit_converges, exit_threshold, j_function
from .protograph import (IRA_Z7_RATE_HALF, RA_RATES, BaseMatrix, check_merge, ira_base,
                         ira_family, merge_rows, ra_base)

__all__ = [
    "BaseMatrix", "DecodeResult", "IRA_Z7_RATE_HALF", "LiftedCode", "RA_RATES",
    "bp_decode", "bp_posteriors", "capacity_sigma", "check_merge", "dumps_base",
    "dumps_code", "exit_converges", "exit_threshold", "ira_base", "ira_family",
    "j_function", "lift", "lift_for_length", "loads_base", "loads_code", "merge_rows",
    "ra_base",
]
