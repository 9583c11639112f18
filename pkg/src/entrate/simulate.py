"""Synthetic sources with known entropy rates, for testing and calibration.

Provides i.i.d. and order-1 Markov streams plus the closed-form rates they
should converge to, and a text emitter so the synthetic streams can feed
the normal corpus pipeline.
"""

from __future__ import annotations

import string

import numpy as np

from entrate.tokenizer import TokenStream, Vocabulary


def _symbols(alphabet_size: int) -> list[str]:
    if alphabet_size <= 26:
        return list(string.ascii_lowercase[:alphabet_size])
    return [f"s{i}" for i in range(alphabet_size)]


def symbol_vocabulary(alphabet_size: int) -> Vocabulary:
    return Vocabulary(_symbols(alphabet_size), "word")


def iid_stream(alphabet_size: int, length: int, seed: int,
               probs=None) -> TokenStream:
    """Memoryless stream; entropy rate log2(alphabet_size) when uniform."""
    rng = np.random.default_rng(seed)
    tokens = rng.choice(alphabet_size, size=length, p=probs).astype(np.int32)
    meta = {"source": "iid", "alphabet": alphabet_size, "seed": seed}
    return TokenStream(tokens, symbol_vocabulary(alphabet_size), meta)


def markov_stream(transition, length: int, seed: int) -> TokenStream:
    """Order-1 Markov stream started from the stationary distribution."""
    P = np.asarray(transition, dtype=np.float64)
    k = P.shape[0]
    if P.shape != (k, k) or np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0):
        raise ValueError("transition must be a square row-stochastic matrix")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(P, axis=1)
    u = rng.random(length)
    tokens = np.empty(length, dtype=np.int32)
    state = int(rng.choice(k, p=stationary_distribution(P)))
    for i in range(length):
        state = int(np.searchsorted(cum[state], u[i], side="right"))
        state = min(state, k - 1)  # guard against u == 1.0 edge
        tokens[i] = state
    meta = {"source": "markov", "alphabet": k, "seed": seed}
    return TokenStream(tokens, symbol_vocabulary(k), meta)


def stationary_distribution(transition) -> np.ndarray:
    """Left eigenvector of the transition matrix for eigenvalue 1."""
    P = np.asarray(transition, dtype=np.float64)
    w, v = np.linalg.eig(P.T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, i])
    pi = np.abs(pi)
    return pi / pi.sum()


def markov_entropy_rate(transition) -> float:
    """Closed-form rate sum_i pi_i * H(row_i), in bits per symbol."""
    P = np.asarray(transition, dtype=np.float64)
    pi = stationary_distribution(P)
    rate = 0.0
    for i in range(P.shape[0]):
        row = P[i][P[i] > 0]
        rate += pi[i] * float(-(row * np.log2(row)).sum())
    return rate


def stream_to_text(stream: TokenStream) -> str:
    """Space-separated surface form, consumable by the word tokenizer."""
    return " ".join(stream.surfaces())
