"""Conventional text metrics used as comparison points: BLEU, ROUGE-1,
CER and WER.

These deliberately work on raw whitespace tokens (or raw characters) and
skip LaTeX-aware spacing normalization, so they keep the spacing
sensitivity that makes them poor judges of LaTeX output.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

BLEU_EPSILON = 1e-9


@dataclass(frozen=True)
class BaselineScores:
    bleu: float
    rouge1_f: float
    cer: float
    wer: float


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Unit-cost edit distance between two sequences (two-row DP)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def _ngrams(words: list[str], n: int) -> Counter:
    return Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))


def bleu(ref: str, pred: str, max_n: int = 4) -> float:
    """Sentence BLEU with brevity penalty.

    Zero clipped precisions are replaced by ``BLEU_EPSILON``. Orders longer
    than the prediction have no candidate n-grams and are left out of the
    geometric mean, so ``bleu(x, x) == 1`` holds for short ``x`` too.
    """
    r = ref.split()
    p = pred.split()
    if not p:
        return 0.0
    if not r:
        return 0.0
    orders = range(1, min(max_n, len(p)) + 1)
    log_prec = 0.0
    for n in orders:
        cand = _ngrams(p, n)
        refc = _ngrams(r, n)
        clipped = sum(min(c, refc[g]) for g, c in cand.items())
        prec = clipped / sum(cand.values())
        log_prec += math.log(prec if clipped else BLEU_EPSILON)
    bp = 1.0 if len(p) > len(r) else math.exp(1.0 - len(r) / len(p))
    return bp * math.exp(log_prec / len(orders))


def rouge1(ref: str, pred: str) -> float:
    """Unigram F1 with clipped overlap counts."""
    r = Counter(ref.split())
    p = Counter(pred.split())
    if not r and not p:
        return 1.0
    if not r or not p:
        return 0.0
    overlap = sum((r & p).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(p.values())
    recall = overlap / sum(r.values())
    return 2 * precision * recall / (precision + recall)


def _error_rate(ref: Sequence, pred: Sequence) -> float:
    if not ref:
        return 0.0 if not pred else 1.0
    return levenshtein(ref, pred) / len(ref)


def cer(ref: str, pred: str) -> float:
    """Character error rate on the raw strings."""
    return _error_rate(ref, pred)


def wer(ref: str, pred: str) -> float:
    """Word error rate over ``str.split()`` words."""
    return _error_rate(ref.split(), pred.split())


def all_baselines(ref: str, pred: str) -> BaselineScores:
    return BaselineScores(bleu(ref, pred), rouge1(ref, pred), cer(ref, pred), wer(ref, pred))
