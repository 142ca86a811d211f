"""
.. include:: ../README.md
"""

from .engine import Kind, PauliOperator, CircuitLocation, ShotRecord, conjugate_pauli, run_shot, to_stim
from .noise import NoiseParams, channel_for, sample_faults
from .codes import CssCode, hamming_code, steane_code, c4_code, c6_code, code_by_name, Tower
from .decoders import DecodedOutcome, decode_c4, decode_c6, decode_steane, decode_hamming, decode_block, \
  knill_frame_update
from .gadgets import BenchmarkSpec, build_cnot_benchmark, build_prep, build_knill_ec, dump, parse_dump
from .estimator import ShotTally, RateEstimate, run_benchmark, logical_cnot_rate, sigma_log10
from .fit import FitConstants, load_constants, fit_fixed_exponent, fit_c4c6, fit_critical_exponent, thresholds
from .planner import ConcatChain, TargetSpec, InfeasibleError, compose_error, space_overhead, optimize_chain, \
  surface_overhead_for_target, rsa_cnot_count, classical_error_budget
from .grammar import parse_chain, parse_grid

__version__ = "0.1.0"
