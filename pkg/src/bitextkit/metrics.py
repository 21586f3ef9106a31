"""BLEU (sentence and corpus level) and the paired sign test.

Scores are computed on pre-tokenized input with a single reference.
Orders for which the hypothesis side has no n-grams at all (a hypothesis
shorter than ``n``) are left out of the geometric mean, so the effective
order is ``min(max_n, hypothesis length)``; this keeps ``bleu(t, t) == 1``
for short ``t``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import EmptyCorpus, EmptyReference, LengthMismatch

SMOOTHING = ("none", "add-one-on-zero")


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    case_insensitive: bool = True
    smoothing: str = "none"

    def __post_init__(self):
        if not 1 <= self.max_n <= 9:
            raise ValueError("max_n must be within 1..9")
        if self.smoothing not in SMOOTHING:
            raise ValueError(f"smoothing must be one of {SMOOTHING}")


ALIGN_BLEU = BleuConfig(smoothing="add-one-on-zero")


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple = field(default_factory=tuple)
    brevity_penalty: float = 1.0
    hyp_len: int = 0
    ref_len: int = 0

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "precisions": list(self.precisions),
            "brevity_penalty": self.brevity_penalty,
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
        }


def ngram_stats(hyp: Sequence[str], ref: Sequence[str], max_n: int):
    """Clipped match counts and hypothesis n-gram totals for orders 1..max_n."""
    matches, totals = [0] * max_n, [0] * max_n
    for n in range(1, max_n + 1):
        if len(hyp) < n:
            break
        h = Counter(tuple(hyp[i:i + n]) for i in range(len(hyp) - n + 1))
        r = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
        matches[n - 1] = sum(min(c, r[g]) for g, c in h.items())
        totals[n - 1] = len(hyp) - n + 1
    return matches, totals


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    if hyp_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / hyp_len)


def _score(matches, totals, hyp_len, ref_len, smoothing) -> BleuScore:
    bp = brevity_penalty(hyp_len, ref_len)
    # smoothing rescues missing higher-order matches, never a total lack of overlap
    smooth = smoothing == "add-one-on-zero" and matches[0] > 0
    precisions = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0 and smooth:
            precisions.append(1.0 / (2 * t))
        else:
            precisions.append(m / t)
    if not precisions or min(precisions) == 0.0:
        return BleuScore(0.0, tuple(precisions), bp, hyp_len, ref_len)
    log_mean = math.fsum(math.log(p) for p in precisions) / len(precisions)
    return BleuScore(bp * math.exp(log_mean), tuple(precisions), bp, hyp_len, ref_len)


def _fold(tokens, cfg):
    return [t.lower() for t in tokens] if cfg.case_insensitive else list(tokens)


def sentence_bleu(hyp: Sequence[str], ref: Sequence[str], cfg: BleuConfig = BleuConfig()) -> BleuScore:
    if not ref:
        raise EmptyReference("reference is empty")
    hyp, ref = _fold(hyp, cfg), _fold(ref, cfg)
    matches, totals = ngram_stats(hyp, ref, cfg.max_n)
    return _score(matches, totals, len(hyp), len(ref), cfg.smoothing)


def corpus_bleu(pairs, cfg: BleuConfig = BleuConfig()) -> BleuScore:
    """BLEU with n-gram counts and lengths pooled over ``(hyp, ref)`` pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyCorpus("no sentence pairs to score")
    matches, totals = [0] * cfg.max_n, [0] * cfg.max_n
    hyp_len = ref_len = 0
    for lineno, (hyp, ref) in enumerate(pairs):
        if not ref:
            raise EmptyReference(f"reference {lineno} is empty")
        hyp, ref = _fold(hyp, cfg), _fold(ref, cfg)
        m, t = ngram_stats(hyp, ref, cfg.max_n)
        for i in range(cfg.max_n):
            matches[i] += m[i]
            totals[i] += t[i]
        hyp_len += len(hyp)
        ref_len += len(ref)
    # smoothing is a sentence-level device; corpus scores are never smoothed
    return _score(matches, totals, hyp_len, ref_len, "none")


def binomial_two_sided(wins: int, losses: int) -> float:
    """Exact two-sided binomial p-value under p = 0.5."""
    n = wins + losses
    if n == 0:
        return 1.0
    k = min(wins, losses)
    tail = Fraction(sum(math.comb(n, i) for i in range(k + 1)), 2 ** n)
    return float(min(Fraction(1), 2 * tail))


def sign_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> float:
    if len(scores_a) != len(scores_b):
        raise LengthMismatch(f"{len(scores_a)} vs {len(scores_b)} scores")
    if len(scores_a) == 0:
        raise LengthMismatch("sign test needs at least one paired score")
    wins = sum(1 for a, b in zip(scores_a, scores_b) if a > b)
    losses = sum(1 for a, b in zip(scores_a, scores_b) if a < b)
    return binomial_two_sided(wins, losses)
