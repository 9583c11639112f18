"""Plug-in Shannon and conditional entropies over an n-gram table.

The conditional estimator weights each observed context by its empirical
probability and averages the entropy of the next-symbol distribution given
that context. This form is non-negative by construction, unlike the block
entropy difference H_n - H_{n-1}, which can dip below zero on finite
samples. No smoothing or bias correction is applied; undersampling is
reported separately (see entrate.diagnose).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from entrate.ngrams import NgramTable


class NotADistribution(ValueError):
    pass


class OrderOutOfRange(ValueError):
    pass


@dataclass
class EntropyCurve:
    """Conditional entropies h(1)..h(n_max) in bits per token."""

    points: list[tuple[int, float]]
    granularity: str
    totals: dict[int, int]
    distinct: dict[int, int]

    @property
    def n_max(self) -> int:
        return self.points[-1][0]

    def h(self, n: int) -> float:
        return self.points[n - 1][1]


def shannon_entropy(p, tol: float = 1e-9) -> float:
    """Entropy -sum p_i log2 p_i of a probability vector, in bits."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size == 0 or np.any(p < 0):
        raise NotADistribution("probabilities must be non-negative")
    s = p.sum()
    if abs(s - 1.0) > tol:
        raise NotADistribution(f"probabilities sum to {s!r}, not 1")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def conditional_entropy(table: NgramTable, n: int) -> float:
    """h(n) = H(X_n | X_{n-1}..X_1) from plug-in n-gram frequencies, in bits.

    For n = 1 this is the unigram entropy. For n >= 2, contexts are the
    (n-1)-prefixes of the stored n-grams; each context contributes its
    empirical weight times the entropy of its next-symbol distribution.
    """
    if n < 1 or n > table.n_max:
        raise OrderOutOfRange(f"order {n} outside 1..{table.n_max}")
    counts = table.counts[n].astype(np.float64)
    total = float(table.total[n])
    if n == 1:
        return shannon_entropy(counts / total)
    rows = table.grams[n]
    prefix = rows[:, : n - 1]
    new = np.empty(rows.shape[0], dtype=bool)
    new[0] = True
    np.any(prefix[1:] != prefix[:-1], axis=1, out=new[1:])
    starts = np.flatnonzero(new)
    ctx_totals = np.add.reduceat(counts, starts)
    ctx_per_row = ctx_totals[np.cumsum(new) - 1]
    # sum over rows of count * log2(ctx_total/count), then normalize
    h = float((counts * np.log2(ctx_per_row / counts)).sum()) / total
    return max(h, 0.0)


def entropy_curve(table: NgramTable, granularity: str = "word") -> EntropyCurve:
    """Conditional entropies at every order 1..n_max plus sampling counts."""
    if table.n_max < 1:
        raise OrderOutOfRange("table has no orders")
    points = [(n, conditional_entropy(table, n)) for n in range(1, table.n_max + 1)]
    return EntropyCurve(
        points=points,
        granularity=granularity,
        totals=dict(table.total),
        distinct={k: table.distinct(k) for k in range(1, table.n_max + 1)},
    )


def write_curve_csv(curve: EntropyCurve, report, fh) -> None:
    """CSV export: n, h_bits, total, distinct, coverage.

    `report` is a CoverageReport (entrate.diagnose); pass None to leave the
    coverage column empty.
    """
    fh.write("n,h_bits,total,distinct,coverage\n")
    for n, h in curve.points:
        cov = "" if report is None else repr(report.per_order[n].coverage)
        fh.write(f"{n},{h!r},{curve.totals[n]},{curve.distinct[n]},{cov}\n")
