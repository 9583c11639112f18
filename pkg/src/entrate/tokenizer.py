"""Raw text -> token-ID streams, at letter or word granularity.

Normalization is deterministic and documented here because results must be
reproducible bit-for-bit: NFC normalization, lower-casing via str.casefold,
words are maximal alphanumeric runs with internal apostrophes/hyphens, and
the letter alphabet is a fixed 45-symbol set.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

import numpy as np

# a-z (26) + 0-9 (10) + space + 8 punctuation marks = 45 symbols
LETTER_ALPHABET: tuple[str, ...] = (
    tuple("abcdefghijklmnopqrstuvwxyz")
    + tuple("0123456789")
    + (" ",)
    + tuple(".,;:'-?!")
)
assert len(LETTER_ALPHABET) == 45

# word = run of letters/digits, optionally chained by single internal ' or -
# [^\W_] is "alphanumeric without underscore" under re.UNICODE
_WORD_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*")
_WS_RE = re.compile(r"\s+")


@dataclass
class Vocabulary:
    """Bijection between surface tokens and dense 0-based integer IDs."""

    entries: list[str]
    granularity: str  # "letter" or "word"
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {tok: i for i, tok in enumerate(self.entries)}
        if len(self.index) != len(self.entries):
            raise ValueError("duplicate surface tokens in vocabulary")

    @property
    def size(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class TokenStream:
    """Sequence of token IDs plus its vocabulary and provenance metadata."""

    tokens: np.ndarray  # int32
    vocab: Vocabulary
    source_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int32)
        if self.tokens.size and int(self.tokens.max()) >= self.vocab.size:
            raise ValueError("token ID out of vocabulary range")

    def __len__(self) -> int:
        return int(self.tokens.size)

    def surfaces(self) -> list[str]:
        """Token IDs mapped back to surface strings."""
        return [self.vocab.entries[t] for t in self.tokens]


def _normalize(text: str) -> str:
    return unicodedata.normalize("NFC", text).casefold()


def tokenize_words(text: str, source_meta: dict | None = None) -> TokenStream:
    """Split normalized text into words; vocabulary in first-appearance order.

    Words are maximal runs of Unicode letters/digits, with apostrophes and
    hyphens kept only between alphanumeric runs; everything else separates.
    """
    entries: list[str] = []
    index: dict[str, int] = {}
    ids: list[int] = []
    for m in _WORD_RE.finditer(_normalize(text)):
        w = m.group(0)
        tid = index.get(w)
        if tid is None:
            tid = len(entries)
            index[w] = tid
            entries.append(w)
        ids.append(tid)
    vocab = Vocabulary(entries, "word")
    return TokenStream(np.array(ids, dtype=np.int32), vocab, source_meta or {})


def tokenize_letters(text: str, source_meta: dict | None = None) -> TokenStream:
    """Map normalized text onto the fixed 45-symbol letter alphabet.

    Whitespace runs collapse to a single space; characters outside the
    alphabet are dropped. The vocabulary is always the full 45-symbol set.
    """
    vocab = letter_vocabulary()
    norm = _WS_RE.sub(" ", _normalize(text)).strip()
    ids = [vocab.index[ch] for ch in norm if ch in vocab.index]
    return TokenStream(np.array(ids, dtype=np.int32), vocab, source_meta or {})


def letter_vocabulary() -> Vocabulary:
    return Vocabulary(list(LETTER_ALPHABET), "letter")


def detokenize_words(stream: TokenStream) -> str:
    """Join word surfaces with single spaces (the canonical surface form)."""
    if stream.vocab.granularity != "word":
        raise ValueError("detokenize_words requires a word-granularity stream")
    return " ".join(stream.surfaces())


def merge_vocabularies(vocabs: list[Vocabulary]) -> Vocabulary:
    """Deterministic merge for vocabularies built in parallel.

    Surface tokens are unioned and assigned IDs in lexicographic order,
    independent of input order.
    """
    if not vocabs:
        raise ValueError("nothing to merge")
    gran = vocabs[0].granularity
    if any(v.granularity != gran for v in vocabs):
        raise ValueError("cannot merge vocabularies of different granularity")
    merged = sorted(set().union(*(v.entries for v in vocabs)))
    return Vocabulary(merged, gran)


def remap_stream(stream: TokenStream, vocab: Vocabulary) -> TokenStream:
    """Re-express a stream's IDs in a (super)vocabulary, e.g. after merging."""
    lut = np.array([vocab.index[t] for t in stream.vocab.entries], dtype=np.int32)
    tokens = lut[stream.tokens] if stream.tokens.size else stream.tokens
    return TokenStream(tokens, vocab, dict(stream.source_meta))
