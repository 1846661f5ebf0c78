"""Rule catalog, equivalence decision and normalisation."""

from .catalog import RewriteRule, find_rule, rule_catalog
from .equivalence import (
    DEFAULT_MAX_VARS,
    EquivalenceError,
    Equivalent,
    Exact,
    NotEquivalent,
    Sampled,
    SampledEquivalent,
    TooManyVariables,
    UnsatisfiableConditions,
    check_valuation,
    comparison_patterns,
    decide_equivalence,
    pattern_count,
)
from .normal import (
    BudgetExhausted,
    NormalizeError,
    NotRepresentable,
    Reduction,
    SelfCheckFailed,
    apply_reduction,
    normalize,
    sum_to_term,
    to_sum,
)
from .verify import CatalogReport, RuleCheck, verify_catalog

__all__ = [
    "BudgetExhausted",
    "CatalogReport",
    "DEFAULT_MAX_VARS",
    "EquivalenceError",
    "Equivalent",
    "Exact",
    "NormalizeError",
    "NotEquivalent",
    "NotRepresentable",
    "Reduction",
    "RewriteRule",
    "RuleCheck",
    "Sampled",
    "SampledEquivalent",
    "SelfCheckFailed",
    "TooManyVariables",
    "UnsatisfiableConditions",
    "apply_reduction",
    "check_valuation",
    "comparison_patterns",
    "decide_equivalence",
    "find_rule",
    "normalize",
    "pattern_count",
    "rule_catalog",
    "sum_to_term",
    "to_sum",
    "verify_catalog",
]
