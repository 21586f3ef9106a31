"""Paragraph- and sentence-level alignment inside an aligned document pair.

Units (paragraphs or sentences) are aligned in three steps:

1. If both sides hold the same number of units they are paired one by one
   in order (the count rule).
2. Otherwise every source unit is machine translated, a sentence-BLEU
   matrix against the target units is computed, and reliable 1-1 anchors
   are picked: entries above ``theta`` that are the strict maximum of their
   row and column, filtered to the longest monotone chain.
3. Anchors may absorb one unaligned neighbour when the merged pair scores
   higher. The remaining gaps between anchors are aligned by a BLEU
   dynamic program over 1-1/1-2/2-1 groups, and what is still left by a
   Gale-Church style length model fitted to the anchors.

All spans are half-open ``(start, stop)`` index ranges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyDocument, EmptyParagraph
from .metrics import ALIGN_BLEU, BleuConfig, sentence_bleu
from .textnorm import NormConfig, analyze, split_sentences
from .translator import TranslatorSpec, translate_batch

METHODS = ("count_rule", "bleu_anchor", "bleu_merge", "length_fill")
GROUPS = ((1, 1), (1, 2), (2, 1))


@dataclass(frozen=True)
class HierConfig:
    theta: float = 0.1
    theta_gap: float = 0.05
    max_gap: int = 8
    count_rule_filter: bool = True
    filter_min_bleu: float = 0.01
    min_anchors: int = 3
    bleu: BleuConfig = ALIGN_BLEU
    norm: NormConfig = NormConfig()
    priors: tuple = (((1, 1), 0.89), ((1, 2), 0.089), ((2, 1), 0.089), ((1, 0), 0.01), ((0, 1), 0.01))

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must be within (0, 1)")
        if not 0.0 <= self.theta_gap <= 1.0:
            raise ValueError("theta_gap must be within [0, 1]")
        if self.max_gap < 1:
            raise ValueError("max_gap must be >= 1")


@dataclass(frozen=True)
class UnitPair:
    level: str
    src_span: tuple
    tgt_span: tuple
    score: float
    method: str

    @property
    def shape(self) -> tuple:
        return (self.src_span[1] - self.src_span[0], self.tgt_span[1] - self.tgt_span[0])


@dataclass
class BleuMatrix:
    scores: np.ndarray

    @property
    def rows(self) -> int:
        return self.scores.shape[0]

    @property
    def cols(self) -> int:
        return self.scores.shape[1]

    def __getitem__(self, ij):
        return float(self.scores[ij])


def _concat(units, start, stop):
    out = []
    for u in units[start:stop]:
        out.extend(u)
    return out


def _bleu(hyp, ref, cfg: BleuConfig) -> float:
    if not ref:
        return 0.0
    return sentence_bleu(hyp, ref, cfg).score


def bleu_matrix_from_translations(translated, tgt_units, cfg: BleuConfig = ALIGN_BLEU) -> BleuMatrix:
    m = np.zeros((len(translated), len(tgt_units)))
    for i, hyp in enumerate(translated):
        for j, ref in enumerate(tgt_units):
            m[i, j] = _bleu(hyp, ref, cfg)
    return BleuMatrix(m)


def compute_bleu_matrix(src_units, tgt_units, spec: TranslatorSpec, cfg: BleuConfig = ALIGN_BLEU) -> BleuMatrix:
    """Entry (i, j) is sentence BLEU of translated source unit i against target unit j."""
    translated = translate_batch(spec, src_units)
    return bleu_matrix_from_translations(translated, tgt_units, cfg)


# --- anchors ----------------------------------------------------------------

def anchor_candidates(m: BleuMatrix, theta: float) -> list:
    s = m.scores
    out = []
    for i in range(s.shape[0]):
        if s.shape[1] == 0:
            break
        row = s[i]
        j = int(np.argmax(row))
        v = row[j]
        if v < theta:
            continue
        if np.count_nonzero(row == v) > 1:
            continue
        col = s[:, j]
        if np.count_nonzero(col >= v) > 1:
            continue
        out.append((i, j))
    return out


def find_anchors(m: BleuMatrix, theta: float) -> list:
    """Longest chain of candidates increasing in both i and j.

    Candidates are strict row and column maxima at or above ``theta``. Among
    chains of equal length the higher total score wins; remaining ties go
    to the chain that picks the earlier candidate.
    """
    cands = anchor_candidates(m, theta)
    if not cands:
        return []
    n = len(cands)
    # best[k] = (length, total) of the best chain ending at candidate k
    best = [(1, m[c]) for c in cands]
    prev = [-1] * n
    for k in range(n):
        for p in range(k):
            if cands[p][1] < cands[k][1]:
                cand = (best[p][0] + 1, best[p][1] + m[cands[k]])
                if cand[0] > best[k][0] or (cand[0] == best[k][0] and cand[1] > best[k][1]):
                    best[k] = cand
                    prev[k] = p
    end = 0
    for k in range(1, n):
        if best[k][0] > best[end][0] or (best[k][0] == best[end][0] and best[k][1] > best[end][1]):
            end = k
    chain = []
    while end != -1:
        chain.append(cands[end])
        end = prev[end]
    return chain[::-1]


# --- length model -----------------------------------------------------------

@dataclass(frozen=True)
class LengthModel:
    """Gaussian model of target length given source length (in characters)."""

    ratio: float = 1.0
    variance: float = 6.8
    MIN_VARIANCE = 0.5

    @classmethod
    def estimate(cls, pairs, fallback: "LengthModel | None" = None, min_pairs: int = 3) -> "LengthModel":
        pairs = [(a, b) for a, b in pairs if a > 0 and b > 0]
        if len(pairs) < min_pairs:
            return fallback or cls()
        ratio = sum(b for _, b in pairs) / sum(a for a, _ in pairs)
        var = sum((b - ratio * a) ** 2 / a for a, b in pairs) / len(pairs)
        return cls(ratio, max(var, cls.MIN_VARIANCE))

    def cost(self, l1: int, l2: int, prior: float) -> float:
        mean = (l1 + l2 / self.ratio) / 2.0
        if mean <= 0:
            delta = 0.0
        else:
            delta = (self.ratio * l1 - l2) / math.sqrt(mean * self.variance)
        p = math.erfc(abs(delta) / math.sqrt(2.0))  # two-sided tail 2 * (1 - Phi(|delta|))
        return -math.log(prior) - math.log(max(p, 1e-300))


def unit_length(tokens) -> int:
    return sum(len(t) for t in tokens)


def length_dp(src_lens: Sequence[int], tgt_lens: Sequence[int], model: LengthModel, priors) -> list:
    """Minimal-cost monotone path; returns ``(i, j, di, dj)`` moves including 1-0/0-1."""
    priors = dict(priors)
    moves = [mv for mv in ((1, 1), (1, 2), (2, 1), (1, 0), (0, 1)) if priors.get(mv, 0) > 0]
    a, b = len(src_lens), len(tgt_lens)
    inf = float("inf")
    cost = [[inf] * (b + 1) for _ in range(a + 1)]
    back = [[None] * (b + 1) for _ in range(a + 1)]
    cost[0][0] = 0.0
    for i in range(a + 1):
        for j in range(b + 1):
            if i == 0 and j == 0:
                continue
            for di, dj in moves:
                pi, pj = i - di, j - dj
                if pi < 0 or pj < 0 or cost[pi][pj] == inf:
                    continue
                c = cost[pi][pj] + model.cost(sum(src_lens[pi:i]), sum(tgt_lens[pj:j]), priors[(di, dj)])
                if c < cost[i][j]:
                    cost[i][j] = c
                    back[i][j] = (di, dj)
    path, i, j = [], a, b
    while i or j:
        di, dj = back[i][j]
        i, j = i - di, j - dj
        path.append((i, j, di, dj))
    return path[::-1]


def length_dp_cost(src_lens, tgt_lens, path, model: LengthModel, priors) -> float:
    priors = dict(priors)
    return sum(model.cost(sum(src_lens[i:i + di]), sum(tgt_lens[j:j + dj]), priors[(di, dj)])
               for i, j, di, dj in path)


# --- gap filling ------------------------------------------------------------

def group_bleu(translated, tgt_units, i, j, di, dj, m: BleuMatrix | None, cfg: BleuConfig) -> float:
    if di == 1 and dj == 1 and m is not None:
        return m[i, j]
    return _bleu(_concat(translated, i, i + di), _concat(tgt_units, j, j + dj), cfg)


def bleu_gap_dp(translated, tgt_units, src_range, tgt_range, m: BleuMatrix | None,
                theta_gap: float, cfg: BleuConfig = ALIGN_BLEU):
    """Best monotone set of 1-1/1-2/2-1 groups inside one gap.

    Maximizes the summed BLEU of accepted groups; a group is admissible only
    when its merged BLEU reaches ``theta_gap``. Units may stay unaligned.
    Returns ``(total, [(i, j, di, dj, score), ...])`` in absolute indices.
    """
    s0, s1 = src_range
    t0, t1 = tgt_range
    a, b = s1 - s0, t1 - t0
    best = [[0.0] * (b + 1) for _ in range(a + 1)]
    back = [[None] * (b + 1) for _ in range(a + 1)]
    for i in range(a + 1):
        for j in range(b + 1):
            if i == 0 and j == 0:
                continue
            cur, how = -1.0, None
            if i > 0 and best[i - 1][j] > cur:
                cur, how = best[i - 1][j], (1, 0, 0.0)
            if j > 0 and best[i][j - 1] > cur:
                cur, how = best[i][j - 1], (0, 1, 0.0)
            for di, dj in GROUPS:
                if i < di or j < dj:
                    continue
                g = group_bleu(translated, tgt_units, s0 + i - di, t0 + j - dj, di, dj, m, cfg)
                if g < theta_gap or g <= 0.0:
                    continue
                if best[i - di][j - dj] + g > cur:
                    cur, how = best[i - di][j - dj] + g, (di, dj, g)
            best[i][j], back[i][j] = cur, how
    groups, i, j = [], a, b
    while i or j:
        di, dj, g = back[i][j]
        i, j = i - di, j - dj
        if di and dj:
            groups.append((s0 + i, t0 + j, di, dj, g))
    return best[a][b], groups[::-1]


def _gaps(anchor_spans, n_src, n_tgt):
    """Rectangles of unaligned units between consecutive aligned spans."""
    out, ps, pt = [], 0, 0
    for (s0, s1), (t0, t1) in list(anchor_spans) + [((n_src, n_src), (n_tgt, n_tgt))]:
        out.append(((ps, s0), (pt, t0)))
        ps, pt = s1, t1
    return out


def extend_anchors(anchors, translated, tgt_units, m: BleuMatrix, cfg: HierConfig) -> list:
    """Let each anchor absorb one adjacent unaligned unit when that raises its BLEU.

    Returns ``(src_span, tgt_span, score, method)`` tuples, still monotone.
    """
    n_src, n_tgt = len(translated), len(tgt_units)
    src_taken = {i for i, _ in anchors}
    tgt_taken = {j for _, j in anchors}
    out = []
    for i, j in anchors:
        base = m[i, j]
        best = (base, (i, i + 1), (j, j + 1))
        options = (
            ((i, i + 1), (j, j + 2), ("t", j + 1)),
            ((i, i + 1), (j - 1, j + 1), ("t", j - 1)),
            ((i, i + 2), (j, j + 1), ("s", i + 1)),
            ((i - 1, i + 1), (j, j + 1), ("s", i - 1)),
        )
        for sspan, tspan, (side, k) in options:
            if side == "t" and (k < 0 or k >= n_tgt or k in tgt_taken):
                continue
            if side == "s" and (k < 0 or k >= n_src or k in src_taken):
                continue
            g = _bleu(_concat(translated, *sspan), _concat(tgt_units, *tspan), cfg.bleu)
            if g > best[0] and g >= cfg.theta_gap:
                best = (g, sspan, tspan)
        score, sspan, tspan = best
        if (sspan, tspan) == ((i, i + 1), (j, j + 1)):
            out.append((sspan, tspan, score, "bleu_anchor"))
        else:
            src_taken.update(range(*sspan))
            tgt_taken.update(range(*tspan))
            out.append((sspan, tspan, score, "bleu_merge"))
    return out


def fill_gaps(m: BleuMatrix, anchors, src_units, tgt_units, cfg: HierConfig = HierConfig(),
              level: str = "sentence", length_model: LengthModel | None = None,
              extend: bool = True) -> list[UnitPair]:
    """Align everything between the anchors and merge the result into one monotone list.

    ``src_units`` are the *translated* source units (the BLEU hypotheses);
    ``tgt_units`` the target units. ``length_model`` defaults to one fitted
    on this unit pair's anchors.
    """
    if length_model is None:
        length_model = LengthModel.estimate(
            [(unit_length(src_units[i]), unit_length(tgt_units[j])) for i, j in anchors],
            min_pairs=cfg.min_anchors,
        )
    if extend:
        fixed = extend_anchors(anchors, src_units, tgt_units, m, cfg)
    else:
        fixed = [((i, i + 1), (j, j + 1), m[i, j], "bleu_anchor") for i, j in anchors]

    src_lens = [unit_length(u) for u in src_units]
    tgt_lens = [unit_length(u) for u in tgt_units]
    pairs = [UnitPair(level, s, t, float(score), method) for s, t, score, method in fixed]
    for (s0, s1), (t0, t1) in _gaps([(s, t) for s, t, _, _ in fixed], len(src_units), len(tgt_units)):
        if s1 <= s0 or t1 <= t0:
            continue
        merged = []
        if s1 - s0 <= cfg.max_gap and t1 - t0 <= cfg.max_gap:
            _, groups = bleu_gap_dp(src_units, tgt_units, (s0, s1), (t0, t1), m, cfg.theta_gap, cfg.bleu)
            merged = [((i, i + di), (j, j + dj), g, "bleu_merge") for i, j, di, dj, g in groups]
        pairs.extend(UnitPair(level, s, t, float(g), meth) for s, t, g, meth in merged)
        for (u0, u1), (v0, v1) in _gaps([(s, t) for s, t, _, _ in merged], s1, t1):
            u0, v0 = max(u0, s0), max(v0, t0)
            if u1 <= u0 or v1 <= v0:
                continue
            path = length_dp(src_lens[u0:u1], tgt_lens[v0:v1], length_model, cfg.priors)
            for i, j, di, dj in path:
                if di and dj:
                    si, tj = u0 + i, v0 + j
                    g = group_bleu(src_units, tgt_units, si, tj, di, dj, m, cfg.bleu)
                    pairs.append(UnitPair(level, (si, si + di), (tj, tj + dj), float(g), "length_fill"))
    pairs.sort(key=lambda p: p.src_span)
    return pairs


# --- unit-level driver ------------------------------------------------------

@dataclass
class AlignJob:
    """Everything needed to finish aligning one list of source/target units."""

    level: str
    src_units: list
    tgt_units: list
    translated: list
    count_rule: bool
    matrix: BleuMatrix | None = None
    anchors: list = field(default_factory=list)
    diag: list = field(default_factory=list)

    def anchor_lengths(self) -> list:
        return [(unit_length(self.translated[i]), unit_length(self.tgt_units[j])) for i, j in self.anchors]


def prepare(src_units, tgt_units, spec: TranslatorSpec, cfg: HierConfig = HierConfig(),
            level: str = "sentence", translated=None) -> AlignJob:
    src_units, tgt_units = [list(u) for u in src_units], [list(u) for u in tgt_units]
    if translated is None:
        need = cfg.count_rule_filter or len(src_units) != len(tgt_units)
        translated = translate_batch(spec, src_units) if need else [[] for _ in src_units]
    job = AlignJob(level, src_units, tgt_units, translated, len(src_units) == len(tgt_units))
    if job.count_rule:
        if cfg.count_rule_filter:
            job.diag = [_bleu(h, r, cfg.bleu) for h, r in zip(translated, tgt_units)]
    else:
        job.matrix = bleu_matrix_from_translations(translated, tgt_units, cfg.bleu)
        job.anchors = find_anchors(job.matrix, cfg.theta)
    return job


def finish(job: AlignJob, cfg: HierConfig = HierConfig(), fallback: LengthModel | None = None) -> list[UnitPair]:
    if job.count_rule:
        out = []
        for k in range(len(job.src_units)):
            if cfg.count_rule_filter and job.diag[k] < cfg.filter_min_bleu:
                continue
            out.append(UnitPair(job.level, (k, k + 1), (k, k + 1), 1.0, "count_rule"))
        return out
    model = LengthModel.estimate(job.anchor_lengths(), fallback=fallback, min_pairs=cfg.min_anchors)
    return fill_gaps(job.matrix, job.anchors, job.translated, job.tgt_units, cfg, job.level, model)


def align_units(src_units, tgt_units, spec: TranslatorSpec, cfg: HierConfig = HierConfig(),
                level: str = "sentence", fallback: LengthModel | None = None) -> list[UnitPair]:
    return finish(prepare(src_units, tgt_units, spec, cfg, level), cfg, fallback)


def paragraph_tokens(doc, cfg: HierConfig = HierConfig()) -> list:
    return [analyze(p, doc.lang, cfg.norm) for p in doc.paragraphs]


def align_paragraphs(src_doc, tgt_doc, spec: TranslatorSpec, cfg: HierConfig = HierConfig(),
                     fallback: LengthModel | None = None) -> list[UnitPair]:
    if not src_doc.paragraphs or not tgt_doc.paragraphs:
        raise EmptyDocument(f"document pair {src_doc.id}/{tgt_doc.id} has an empty side")
    return align_units(paragraph_tokens(src_doc, cfg), paragraph_tokens(tgt_doc, cfg), spec, cfg,
                       "paragraph", fallback)


def sentence_units(text: str, lang, cfg: HierConfig = HierConfig()):
    """Split a paragraph into (sentence strings, token lists)."""
    sents = split_sentences(text, lang)
    return sents, [analyze(s, lang, cfg.norm) for s in sents]


def align_sentences(src_text: str, tgt_text: str, spec: TranslatorSpec, cfg: HierConfig = HierConfig(),
                    fallback: LengthModel | None = None):
    """Sentence pairs inside one aligned paragraph pair.

    Returns ``(pairs, src_sentences, tgt_sentences)``.
    """
    src_sents, src_toks = sentence_units(src_text, spec.src, cfg)
    tgt_sents, tgt_toks = sentence_units(tgt_text, spec.tgt, cfg)
    if not src_sents or not tgt_sents:
        raise EmptyParagraph("paragraph pair has an empty side")
    pairs = align_units(src_toks, tgt_toks, spec, cfg, "sentence", fallback)
    return pairs, src_sents, tgt_sents


def span_text(units, span, sep: str = " ") -> str:
    return sep.join(units[span[0]:span[1]])
