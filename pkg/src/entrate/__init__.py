"""Entropy-rate estimation for text sources.

Pipeline: tokenize -> count n-grams -> conditional entropy curve ->
exponential extrapolation; plus a generation harness for collecting
LLM output over chat-completion APIs.
"""

from entrate.tokenizer import Vocabulary, TokenStream, tokenize_words, tokenize_letters
from entrate.ngrams import NgramTable, count_ngrams, merge_tables
from entrate.entropy import EntropyCurve, shannon_entropy, conditional_entropy, entropy_curve
from entrate.fit import ExpFit, fit_exponential, estimate_rate
from entrate.diagnose import CoverageReport, coverage_report, undersampled

__version__ = "0.1.0"
