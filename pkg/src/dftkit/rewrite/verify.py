"""Self-certification of rule catalogs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .catalog import RewriteRule, rule_catalog
from .equivalence import DEFAULT_MAX_VARS, EquivalenceVerdict, Exact, decide_equivalence


@dataclass(frozen=True)
class RuleCheck:
    rule: RewriteRule
    verdict: EquivalenceVerdict

    @property
    def passed(self) -> bool:
        return bool(self.verdict)


@dataclass(frozen=True)
class CatalogReport:
    checks: tuple[RuleCheck, ...]

    @property
    def failures(self) -> tuple[RuleCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __len__(self) -> int:
        return len(self.checks)

    def summary(self) -> str:
        return f"{len(self.checks)} rules verified, {len(self.failures)} failures"


def verify_catalog(
    rules: Iterable[RewriteRule] | None = None, max_vars: int = DEFAULT_MAX_VARS
) -> CatalogReport:
    """Exact-check every rule; failures are reported, never raised."""
    if rules is None:
        rules = rule_catalog()
    mode = Exact(max_vars)
    checks = [RuleCheck(r, decide_equivalence(r.lhs, r.rhs, r.conditions, mode)) for r in rules]
    return CatalogReport(tuple(checks))
