"""Joint byte-pair encoding over two tokenized corpora.

Words are split into characters, with the last character tagged by
``EOW`` so merges can tell word-final context apart. Learning greedily
merges the most frequent adjacent pair (ties broken by the lexicographic
order of ``(left, right)``) until ``n_merges`` merges are recorded or no
pair occurs at least twice.

Applying a model replays the merges in learned order; every unit except
the last one of a word carries the continuation marker.
"""
from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .errors import DanglingMarker, EmptyCorpus

EOW = "</w>"
DEFAULT_MARKER = "@@"
MODEL_HEADER = "#bpe v1"


@dataclass(frozen=True)
class BpeModel:
    merges: tuple
    marker: str = DEFAULT_MARKER
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        merges = tuple(tuple(m) for m in self.merges)
        if len(set(merges)) != len(merges):
            raise ValueError("duplicate merge pairs in BPE model")
        object.__setattr__(self, "merges", merges)

    @property
    def n_merges(self) -> int:
        return len(self.merges)

    @property
    def ranks(self) -> dict:
        ranks = self._cache.get("__ranks__")
        if ranks is None:
            ranks = {pair: i for i, pair in enumerate(self.merges)}
            self._cache["__ranks__"] = ranks
        return ranks

    def segment(self, word: str) -> tuple:
        """Subword units of one word, without markers; the last unit keeps ``EOW``."""
        key = ("seg", word)
        hit = self._cache.get(key)
        if hit is None:
            hit = _segment(word, self.merges, self.ranks)
            self._cache[key] = hit
        return hit

    def dumps(self) -> str:
        lines = [f"{MODEL_HEADER} marker={self.marker}"]
        lines += [f"{left} {right}" for left, right in self.merges]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "BpeModel":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(MODEL_HEADER):
            raise ValueError("missing '#bpe v1' header")
        marker = DEFAULT_MARKER
        for part in lines[0].split()[2:]:
            key, _, value = part.partition("=")
            if key == "marker":
                marker = value
        merges = []
        for lineno, line in enumerate(lines[1:], 2):
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2 or not all(parts):
                raise ValueError(f"line {lineno}: expected 'left right', got {line!r}")
            merges.append(tuple(parts))
        return cls(tuple(merges), marker)

    @classmethod
    def load(cls, path) -> "BpeModel":
        with open(path, encoding="utf-8") as f:
            return cls.loads(f.read())


def _symbols(word: str) -> tuple:
    return tuple(word[:-1]) + (word[-1] + EOW,)


def _merge_pass(syms, pair):
    left, right = pair
    out, i, n = [], 0, len(syms)
    while i < n:
        if i + 1 < n and syms[i] == left and syms[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return tuple(out)


def _segment(word, merges, ranks):
    syms = _symbols(word)
    floor = 0
    # Jumping to the lowest-ranked applicable merge at or after ``floor`` is
    # the same as one sequential pass over the merge list.
    while len(syms) > 1:
        best = None
        for pair in zip(syms, syms[1:]):
            r = ranks.get(pair)
            if r is not None and r >= floor and (best is None or r < best):
                best = r
        if best is None:
            break
        syms = _merge_pass(syms, merges[best])
        floor = best + 1
    return syms


def _pair_counts(syms):
    return Counter(zip(syms, syms[1:]))


def learn_bpe(corpus_a: Iterable[str], corpus_b: Iterable[str], n_merges: int,
              marker: str = DEFAULT_MARKER, min_count: int = 2) -> BpeModel:
    if n_merges < 1:
        raise ValueError("n_merges must be >= 1")
    freqs = Counter(t for t in corpus_a if t)
    freqs.update(t for t in corpus_b if t)
    if not freqs:
        raise EmptyCorpus("both corpora are empty")

    words = sorted(freqs)
    segs = [_symbols(w) for w in words]
    counts = [freqs[w] for w in words]
    stats = Counter()
    where = defaultdict(set)
    for idx, syms in enumerate(segs):
        for pair, c in _pair_counts(syms).items():
            stats[pair] += c * counts[idx]
            where[pair].add(idx)

    heap = [(-c, p[0], p[1]) for p, c in stats.items()]
    heapq.heapify(heap)
    merges = []
    while len(merges) < n_merges and heap:
        neg, left, right = heapq.heappop(heap)
        pair = (left, right)
        if stats.get(pair, 0) != -neg:
            continue  # stale entry
        if -neg < min_count:
            break
        merges.append(pair)
        touched = Counter()
        for idx in sorted(where.pop(pair, ())):
            old = segs[idx]
            new = _merge_pass(old, pair)
            if new == old:
                continue
            for p, c in _pair_counts(old).items():
                stats[p] -= c * counts[idx]
                touched[p] += 0
            for p, c in _pair_counts(new).items():
                stats[p] += c * counts[idx]
                touched[p] += 0
                where[p].add(idx)
            segs[idx] = new
        stats.pop(pair, None)
        for p in touched:
            c = stats.get(p, 0)
            if c <= 0:
                stats.pop(p, None)
            elif p != pair:
                heapq.heappush(heap, (-c, p[0], p[1]))
    return BpeModel(tuple(merges), marker)


def apply_bpe(model: BpeModel, tokens: Iterable[str]) -> list[str]:
    marker = model.marker
    out = []
    for tok in tokens:
        if not tok:
            continue
        units = model.segment(tok)
        last = len(units) - 1
        for i, unit in enumerate(units):
            if i == last:
                out.append(unit[: -len(EOW)])
            else:
                out.append(unit + marker)
    return out


def undo_bpe(subtokens: Iterable[str], marker: str = DEFAULT_MARKER) -> list[str]:
    out, buf = [], []
    for unit in subtokens:
        if unit.endswith(marker):
            buf.append(unit[: -len(marker)])
        else:
            buf.append(unit)
            out.append("".join(buf))
            buf = []
    if buf:
        raise DanglingMarker(f"sequence ends with a unit carrying {marker!r}")
    return out


def vocab_report(corpus: Iterable[str], model: BpeModel | None = None) -> tuple[int, int]:
    corpus = [t for t in corpus if t]
    before = len(set(corpus))
    if model is None:
        return before, before
    return before, len(set(apply_bpe(model, corpus)))
