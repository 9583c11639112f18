"""Per-order undersampling diagnostics for an n-gram table.

The number of possible contexts grows like |A|^n while the sample count is
fixed, so high orders are chronically undersampled; every entropy or fit
output carries these statistics so downstream numbers are labeled honestly.
The primary signal is the Good-Turing missing mass (fraction of n-gram
positions occupied by grams seen exactly once), which is distribution-free.
"""

from __future__ import annotations

from dataclasses import dataclass

from entrate.entropy import OrderOutOfRange
from entrate.ngrams import NgramTable

MISSING_MASS_THRESHOLD = 0.05
TOTAL_TO_DISTINCT_RATIO = 10.0


@dataclass
class OrderCoverage:
    n: int
    possible: int            # min(|A|^n, total): saturation denominator
    distinct: int
    coverage: float          # distinct / possible
    singleton_fraction: float
    missing_mass: float      # Good-Turing: singletons / total

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "possible": self.possible,
            "distinct": self.distinct,
            "coverage": self.coverage,
            "singleton_fraction": self.singleton_fraction,
            "missing_mass": self.missing_mass,
        }


@dataclass
class CoverageReport:
    vocab_size: int
    per_order: dict[int, OrderCoverage]
    totals: dict[int, int]
    pruned: bool = False

    def as_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "pruned": self.pruned,
            "orders": [self.per_order[n].as_dict() for n in sorted(self.per_order)],
        }


def coverage_report(table: NgramTable) -> CoverageReport:
    """Coverage, singleton fraction, and missing mass for every order."""
    per_order = {}
    for n in range(1, table.n_max + 1):
        total = table.total[n]
        distinct = table.distinct(n)
        # Python ints, so |A|^n never overflows before the min
        possible = min(table.vocab_size ** n, total)
        singles = int((table.counts[n] == 1).sum())
        per_order[n] = OrderCoverage(
            n=n,
            possible=possible,
            distinct=distinct,
            coverage=distinct / possible if possible else 0.0,
            singleton_fraction=singles / total if total else 0.0,
            missing_mass=singles / total if total else 0.0,
        )
    return CoverageReport(
        vocab_size=table.vocab_size,
        per_order=per_order,
        totals=dict(table.total),
        pruned=table.pruned,
    )


def undersampled(
    report: CoverageReport,
    n: int,
    missing_mass_threshold: float = MISSING_MASS_THRESHOLD,
    total_ratio: float = TOTAL_TO_DISTINCT_RATIO,
) -> bool:
    """True when order n has too little data to trust its plug-in entropy.

    Rule: missing mass above the threshold, or fewer than `total_ratio`
    sample positions per distinct n-gram. Thresholds are configuration.
    """
    if n not in report.per_order:
        raise OrderOutOfRange(f"order {n} not in report")
    rec = report.per_order[n]
    total = report.totals[n]
    return rec.missing_mass > missing_mass_threshold or total < total_ratio * rec.distinct
