"""Reduce dynamic fault trees with a failure-time algebra and analyse them as Markov chains."""

from .algebra import (
    ALWAYS,
    NEVER,
    AllDistinct,
    ColdSpare,
    NeverEvents,
    TermEqNever,
    Var,
    desugar_gate,
    eval_term,
    free_variables,
)
from .bench import builtin_models, run_comparison
from .galileo import DftModel, load, parse, serialize, to_structure_function, validate
from .markov import build_ctmc, mean_time_to_failure, transient_failure_probability
from .qualitative import extract_cut_sequences, minimize
from .rewrite import apply_reduction, decide_equivalence, normalize, verify_catalog
from .simulate import McEstimate, simulate
from .syntax import format_term, parse_hol, parse_term

__version__ = "0.1.0"

__all__ = [
    "ALWAYS", "NEVER", "AllDistinct", "ColdSpare", "NeverEvents", "TermEqNever", "Var",
    "desugar_gate", "eval_term", "free_variables",
    "builtin_models", "run_comparison",
    "DftModel", "load", "parse", "serialize", "to_structure_function", "validate",
    "build_ctmc", "mean_time_to_failure", "transient_failure_probability",
    "extract_cut_sequences", "minimize",
    "apply_reduction", "decide_equivalence", "normalize", "verify_catalog",
    "McEstimate", "simulate",
    "format_term", "parse_hol", "parse_term",
]
