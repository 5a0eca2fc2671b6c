"""Comparing program invariants produced by different numerical analyses."""
from .compare import Outcome, classify, compare_full, compare_minimal
from .engine import PRESETS, AnalysisConfig, analyze
from .formula import Formula, parse_formula, vars_of
from .ir import parse_program

__version__ = "0.1.0"

__all__ = [
    "Outcome", "classify", "compare_full", "compare_minimal", "PRESETS",
    "AnalysisConfig", "analyze", "Formula", "parse_formula", "vars_of", "parse_program",
]
