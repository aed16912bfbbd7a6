"""Canonical heights, Green functions and Böttcher coordinates for polynomials over Q."""

from .boettcher import (
    LaurentSeries,
    boettcher_series,
    eval_series,
    series_mth_root,
    verify_functional_equation,
    verify_semiconjugacy,
)
from .green import EscapeThreshold, GreenResult, Place, Status, escape_threshold, green_arch, green_nonarch
from .heights import HeightDecomposition, HhatStatus, canonical_height, hhat_status, independence_check, weil_height
from .numeric import ComplexBox, PAdicAbs, RealInterval, interval_log, interval_log_plus, padic_abs
from .polydyn import PolyQ, chebyshev, classify_integrable, detect_preperiodic, monic_center, orbit, parse_poly
from .relations import AuxInstance, AuxPolynomial, aux_residual_decay, build_aux_system, solve_nullspace

__version__ = "0.1.0"
