"""Exact streaming k-gram counts for k = 1..n_max over a token stream.

Counts are kept as lexicographically sorted (m, k) int32 key arrays with
parallel int64 count arrays; this stays within single-machine memory for
1e7-1e8 tokens at n_max = 6 and makes grouping by context a contiguous-run
operation for the entropy module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from entrate.tokenizer import TokenStream, Vocabulary


class StreamTooShort(ValueError):
    pass


class VocabMismatch(ValueError):
    pass


class TableFormatError(ValueError):
    pass


def _sorted_unique_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows in lexicographic order with multiplicities."""
    n, k = rows.shape
    if n == 0:
        return rows.reshape(0, k).astype(np.int32), np.zeros(0, dtype=np.int64)
    if k == 1:
        vals, counts = np.unique(rows[:, 0], return_counts=True)
        return vals.reshape(-1, 1).astype(np.int32), counts.astype(np.int64)
    order = np.lexsort(rows.T[::-1])
    srt = rows[order]
    new = np.empty(n, dtype=bool)
    new[0] = True
    np.any(srt[1:] != srt[:-1], axis=1, out=new[1:])
    starts = np.flatnonzero(new)
    counts = np.diff(np.append(starts, n)).astype(np.int64)
    return np.ascontiguousarray(srt[starts], dtype=np.int32), counts


@dataclass
class NgramTable:
    """Counts of all k-grams, k = 1..n_max, keyed by token-ID tuples."""

    n_max: int
    vocab_size: int
    grams: dict[int, np.ndarray] = field(default_factory=dict)   # (m, k) int32, lex-sorted
    counts: dict[int, np.ndarray] = field(default_factory=dict)  # (m,) int64
    total: dict[int, int] = field(default_factory=dict)          # k-gram positions
    pruned: bool = False

    @classmethod
    def empty(cls, n_max: int, vocab_size: int) -> "NgramTable":
        t = cls(n_max=n_max, vocab_size=vocab_size)
        for k in range(1, n_max + 1):
            t.grams[k] = np.zeros((0, k), dtype=np.int32)
            t.counts[k] = np.zeros(0, dtype=np.int64)
            t.total[k] = 0
        return t

    def distinct(self, k: int) -> int:
        return int(self.counts[k].size)

    def get(self, k: int, gram: tuple[int, ...]) -> int:
        """Count of one k-gram (binary search; 0 if absent)."""
        rows = self.grams[k]
        lo, hi = 0, rows.shape[0]
        key = tuple(gram)
        while lo < hi:
            mid = (lo + hi) // 2
            row = tuple(int(x) for x in rows[mid])
            if row < key:
                lo = mid + 1
            else:
                hi = mid
        if lo < rows.shape[0] and tuple(int(x) for x in rows[lo]) == key:
            return int(self.counts[k][lo])
        return 0

    def as_dict(self, k: int) -> dict[tuple[int, ...], int]:
        """Materialize counts[k] as a plain dict (small tables / tests)."""
        return {
            tuple(int(x) for x in row): int(c)
            for row, c in zip(self.grams[k], self.counts[k])
        }

    def check(self) -> None:
        """Verify internal invariants (totals, sortedness, positivity)."""
        for k in range(1, self.n_max + 1):
            if not self.pruned and int(self.counts[k].sum()) != self.total[k]:
                raise AssertionError(f"count/total mismatch at k={k}")
            if self.counts[k].size and int(self.counts[k].min()) < 1:
                raise AssertionError(f"zero count stored at k={k}")


def count_ngrams(
    stream: TokenStream,
    n_max: int,
    chunks: int = 1,
    workers: int = 1,
    prune_below: int | None = None,
    prune_from_order: int = 5,
) -> NgramTable:
    """Count all k-grams for k = 1..n_max with a sliding window, no resets.

    chunks > 1 shards the stream into pieces that overlap by k-1 positions
    per order (so each k-gram start position lands in exactly one piece),
    counts the pieces independently (optionally on worker threads) and
    merges; the result is identical to chunks=1. prune_below drops k-grams
    (k >= prune_from_order) with count below the threshold and marks the
    table as pruned (memory-budget mode).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = len(stream)
    if n < n_max:
        raise StreamTooShort(f"stream length {n} < n_max {n_max}")

    tokens = stream.tokens
    vocab_size = stream.vocab.size

    if chunks > 1:
        bounds = np.linspace(0, n, chunks + 1, dtype=np.int64)
        spans = [
            (int(bounds[i]), int(bounds[i + 1]))
            for i in range(chunks)
            if bounds[i + 1] > bounds[i]
        ]

        def count_span(span):
            lo, hi = span
            part = NgramTable(n_max=n_max, vocab_size=vocab_size)
            for k in range(1, n_max + 1):
                seg = tokens[lo:min(n, hi + k - 1)]
                if seg.size < k:
                    part.grams[k] = np.zeros((0, k), dtype=np.int32)
                    part.counts[k] = np.zeros(0, dtype=np.int64)
                    part.total[k] = 0
                else:
                    rows, cnts = _sorted_unique_rows(sliding_window_view(seg, k))
                    part.grams[k], part.counts[k] = rows, cnts
                    part.total[k] = int(seg.size) - k + 1
            return part

        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(count_span, spans))
        else:
            parts = [count_span(s) for s in spans]
        table = parts[0]
        for part in parts[1:]:
            table = merge_tables(table, part)
        _prune(table, prune_below, prune_from_order)
        return table

    table = NgramTable(n_max=n_max, vocab_size=vocab_size)
    for k in range(1, n_max + 1):
        windows = sliding_window_view(tokens, k)
        rows, cnts = _sorted_unique_rows(windows)
        table.grams[k] = rows
        table.counts[k] = cnts
        table.total[k] = n - k + 1
    _prune(table, prune_below, prune_from_order)
    return table


def _prune(table: NgramTable, prune_below: int | None, prune_from_order: int) -> None:
    if prune_below is None or prune_below <= 1:
        return
    for k in range(max(1, prune_from_order), table.n_max + 1):
        keep = table.counts[k] >= prune_below
        if not keep.all():
            table.grams[k] = table.grams[k][keep]
            table.counts[k] = table.counts[k][keep]
            table.pruned = True


def merge_tables(t1: NgramTable, t2: NgramTable) -> NgramTable:
    """Pointwise sum of two tables over the same vocabulary and n_max."""
    if t1.n_max != t2.n_max or t1.vocab_size != t2.vocab_size:
        raise VocabMismatch(
            f"n_max {t1.n_max}/{t2.n_max}, vocab {t1.vocab_size}/{t2.vocab_size}"
        )
    out = NgramTable(
        n_max=t1.n_max,
        vocab_size=t1.vocab_size,
        pruned=t1.pruned or t2.pruned,
    )
    for k in range(1, t1.n_max + 1):
        rows = np.concatenate([t1.grams[k], t2.grams[k]], axis=0)
        cnts = np.concatenate([t1.counts[k], t2.counts[k]])
        if rows.shape[0] == 0:
            out.grams[k], out.counts[k] = rows, cnts
        else:
            order = np.lexsort(rows.T[::-1])
            srt, scnt = rows[order], cnts[order]
            new = np.empty(srt.shape[0], dtype=bool)
            new[0] = True
            np.any(srt[1:] != srt[:-1], axis=1, out=new[1:])
            starts = np.flatnonzero(new)
            out.grams[k] = np.ascontiguousarray(srt[starts], dtype=np.int32)
            out.counts[k] = np.add.reduceat(scnt, starts)
        out.total[k] = t1.total[k] + t2.total[k]
    return out


# ---------------------------------------------------------------------------
# Table cache format: TSV with '#'-prefixed header lines, then one line per
# stored gram: k <TAB> space-joined token IDs <TAB> count, sorted by (k, gram).
# An optional vocab header line carries the surface tokens as a JSON array.
# ---------------------------------------------------------------------------

def dump_table(table: NgramTable, path, vocab: Vocabulary | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# entrate-ngram-table v1\n")
        fh.write(f"# n_max={table.n_max} vocab_size={table.vocab_size} "
                 f"pruned={int(table.pruned)}\n")
        for k in range(1, table.n_max + 1):
            fh.write(f"# total {k} {table.total[k]}\n")
        if vocab is not None:
            fh.write("# vocab " + json.dumps(
                {"granularity": vocab.granularity, "entries": vocab.entries},
                ensure_ascii=False) + "\n")
        for k in range(1, table.n_max + 1):
            rows, cnts = table.grams[k], table.counts[k]
            for row, c in zip(rows, cnts):
                fh.write(f"{k}\t{' '.join(str(int(x)) for x in row)}\t{int(c)}\n")


def load_table(path) -> tuple[NgramTable, Vocabulary | None]:
    n_max = vocab_size = None
    pruned = False
    totals: dict[int, int] = {}
    vocab: Vocabulary | None = None
    per_k_rows: dict[int, list[list[int]]] = {}
    per_k_cnts: dict[int, list[int]] = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# entrate-ngram-table"):
            raise TableFormatError(f"{path}: not an entrate n-gram table")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# total "):
                _, _, k, t = line.split(" ", 3)
                totals[int(k)] = int(t)
            elif line.startswith("# vocab "):
                spec = json.loads(line[len("# vocab "):])
                vocab = Vocabulary(spec["entries"], spec["granularity"])
            elif line.startswith("#"):
                for kv in line[1:].split():
                    key, _, val = kv.partition("=")
                    if key == "n_max":
                        n_max = int(val)
                    elif key == "vocab_size":
                        vocab_size = int(val)
                    elif key == "pruned":
                        pruned = bool(int(val))
            else:
                k_s, ids_s, c_s = line.split("\t")
                k = int(k_s)
                per_k_rows.setdefault(k, []).append([int(x) for x in ids_s.split()])
                per_k_cnts.setdefault(k, []).append(int(c_s))
    if n_max is None or vocab_size is None:
        raise TableFormatError(f"{path}: missing n_max/vocab_size header")
    table = NgramTable(n_max=n_max, vocab_size=vocab_size, pruned=pruned)
    for k in range(1, n_max + 1):
        rows = np.array(per_k_rows.get(k, []), dtype=np.int32).reshape(-1, k)
        table.grams[k] = rows
        table.counts[k] = np.array(per_k_cnts.get(k, []), dtype=np.int64)
        table.total[k] = totals.get(k, int(table.counts[k].sum()))
    table.check()
    return table, vocab
