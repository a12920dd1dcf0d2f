"""Laurent coefficients of the exterior Mandelbrot map and area upper bounds."""

from .arith import BigRational, DyadicRational, dyadic_add, dyadic_halve, dyadic_mul, dyadic_to_float
from .area import AreaSeries, accumulate, export_series
from .combinatorics import DigitExpansion, factorial_valuation, p_bound, sum_of_digits, two_adic_valuation
from .engine import EXACT, FLOAT, BatchPlan, BetaTable, CoeffStream, compute_stream, run

__all__ = [
    "AreaSeries",
    "BatchPlan",
    "BetaTable",
    "BigRational",
    "CoeffStream",
    "DigitExpansion",
    "DyadicRational",
    "EXACT",
    "FLOAT",
    "accumulate",
    "compute_stream",
    "dyadic_add",
    "dyadic_halve",
    "dyadic_mul",
    "dyadic_to_float",
    "export_series",
    "factorial_valuation",
    "p_bound",
    "run",
    "sum_of_digits",
    "two_adic_valuation",
]
