"""Pluggable translation backends.

The toolkit never trains MT systems. Alignment and pivot composition talk
to a :class:`TranslatorSpec`, which names one of four backend kinds:

``identity``
    returns its input.
``lexicon``
    token-by-token gloss from a TSV lexicon, unknown tokens pass through.
``cached_table``
    exact-sentence lookup in a ``sentence<TAB>translation`` TSV; misses fall
    back to a lexicon gloss when ``fallback_lexicon`` is set, else pass through.
``external_command``
    a subprocess reading sentences on stdin and writing translations on
    stdout, one line each.

Any kind may additionally set ``cache_path``: an append-only TSV that makes
repeated calls reuse earlier translations instead of re-invoking the backend.
"""
from __future__ import annotations

import hashlib
import os
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import BackendUnavailable, MalformedBackendOutput, PivotMismatch
from .textnorm import Lang, is_cjk, normalize

KINDS = ("lexicon", "external_command", "cached_table", "identity")


@dataclass(frozen=True)
class TranslatorSpec:
    kind: str
    src: Lang
    tgt: Lang
    resource: str | None = None
    cache_path: str | None = None
    fallback_lexicon: str | None = None
    timeout: float = 600.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown translator kind {self.kind!r}")
        object.__setattr__(self, "src", Lang.parse(self.src))
        object.__setattr__(self, "tgt", Lang.parse(self.tgt))
        if self.src == self.tgt and self.kind != "identity":
            raise ValueError("src and tgt must differ unless kind is identity")
        if self.kind != "identity" and not self.resource:
            raise ValueError(f"{self.kind} backend needs a resource")

    @classmethod
    def from_dict(cls, d: dict) -> "TranslatorSpec":
        return cls(**d)

    def identity_hash(self) -> str:
        """Hash of everything that determines the backend's output."""
        h = hashlib.sha256()
        h.update(f"{self.kind}\t{self.src}\t{self.tgt}\t{self.resource}\t{self.fallback_lexicon}".encode())
        for path in (self.resource, self.fallback_lexicon):
            if path and self.kind != "external_command" and os.path.isfile(path):
                h.update(Path(path).read_bytes())
        return h.hexdigest()[:16]


class Lexicon(dict):
    """source token -> ranked tuple of target candidates.

    Chinese is tokenized per character, so a run of single CJK character
    tokens is matched greedily against the longest lexicon key it spells.
    """

    @property
    def max_key_len(self) -> int:
        n = self.__dict__.get("_max_key_len")
        if n is None:
            n = self.__dict__["_max_key_len"] = max((len(k) for k in self), default=1)
        return n

    def segment(self, tokens: Sequence[str]) -> list[str]:
        """Group CJK character tokens into the longest lexicon keys they spell."""
        out, i, n = [], 0, len(tokens)
        longest = self.max_key_len
        while i < n:
            j = i + 1
            if len(tokens[i]) == 1 and is_cjk(tokens[i]):
                stop = i
                while stop < n and stop - i < longest and len(tokens[stop]) == 1 and is_cjk(tokens[stop]):
                    stop += 1
                for end in range(stop, i + 1, -1):
                    if "".join(tokens[i:end]) in self:
                        j = end
                        break
            out.append("".join(tokens[i:j]))
            i = j
        return out

    def lookup(self, term: str):
        cands = self.get(term)
        return cands[0].split(" ") if cands else None

    def gloss(self, tokens: Sequence[str]) -> list[str]:
        out = []
        for term in self.segment(tokens):
            hit = self.lookup(term)
            if hit is not None:
                out.extend(hit)
            else:
                out.append(term)
        return out

    @classmethod
    def load(cls, path) -> "Lexicon":
        lex = cls()
        try:
            f = open(path, encoding="utf-8")
        except OSError as exc:
            raise BackendUnavailable(f"cannot read lexicon {path}: {exc}") from exc
        with f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                src, sep, tgts = line.partition("\t")
                cands = tuple(c for c in tgts.split("|") if c) if sep else ()
                if not src or not cands:
                    raise BackendUnavailable(f"{path}:{lineno}: lexicon entry without candidates")
                lex.setdefault(src, cands)
        return lex

    def add_normalized_keys(self, lang) -> "Lexicon":
        """Also index every entry under its normalized spelling, so analyzed text finds it."""
        for src in list(self):
            self.setdefault(normalize(src, lang), self[src])
        self.__dict__.pop("_max_key_len", None)
        return self

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for src in sorted(self):
                f.write(f"{src}\t{'|'.join(self[src])}\n")


def _read_pairs(path) -> dict:
    table = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            src, sep, tgt = line.partition("\t")
            if sep:
                table[src] = tgt  # last entry wins
    return table


class TranslationCache:
    """Append-only ``sentence<TAB>translation`` file scoped to one backend."""

    def __init__(self, path, backend_hash: str):
        self.path = Path(path)
        self.backend_hash = backend_hash
        self._lock = threading.Lock()
        self._table = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                header = f.readline().rstrip("\n")
            if header == self._header():
                self._table = _read_pairs(self.path)
            else:
                # a cache written by another backend is discarded, not mixed in
                self.path.unlink()

    def _header(self):
        return f"#cache backend={self.backend_hash}"

    def get(self, sentence: str):
        return self._table.get(sentence)

    def put_many(self, items) -> None:
        items = [(s, t) for s, t in items if self._table.get(s) != t]
        if not items:
            return
        with self._lock:
            new = not self.path.exists()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="\n") as f:
                if new:
                    f.write(self._header() + "\n")
                for s, t in items:
                    f.write(f"{s}\t{t}\n")
                    self._table[s] = t


class Translator:
    """A loaded backend. Build via :func:`get_translator` to share loaded resources."""

    def __init__(self, spec: TranslatorSpec):
        self.spec = spec
        self.calls = 0  # backend invocations, cache hits excluded
        self._lexicon = None
        self._table = None
        if spec.kind == "lexicon":
            self._lexicon = Lexicon.load(spec.resource).add_normalized_keys(spec.src)
        elif spec.kind == "cached_table":
            try:
                self._table = _read_pairs(spec.resource)
            except OSError as exc:
                raise BackendUnavailable(f"cannot read table {spec.resource}: {exc}") from exc
            if spec.fallback_lexicon:
                self._lexicon = Lexicon.load(spec.fallback_lexicon).add_normalized_keys(spec.src)
        self.cache = TranslationCache(spec.cache_path, spec.identity_hash()) if spec.cache_path else None

    def translate(self, sentence: Sequence[str]) -> list[str]:
        return self.translate_batch([sentence])[0]

    def translate_batch(self, sentences) -> list[list[str]]:
        lines = [" ".join(s) for s in sentences]
        results = [None] * len(lines)
        todo = []
        for i, line in enumerate(lines):
            hit = self.cache.get(line) if self.cache else None
            if hit is not None:
                results[i] = hit
            else:
                todo.append(i)
        if todo:
            distinct = list(dict.fromkeys(lines[i] for i in todo))
            translated = dict(zip(distinct, self._backend(distinct)))
            for i in todo:
                results[i] = translated[lines[i]]
            if self.cache:
                self.cache.put_many(translated.items())
        return [r.split() for r in results]

    def _backend(self, lines: list[str]) -> list[str]:
        self.calls += len(lines)
        kind = self.spec.kind
        if kind == "identity":
            return list(lines)
        if kind == "lexicon":
            return [" ".join(self._lexicon.gloss(line.split())) for line in lines]
        if kind == "cached_table":
            out = []
            for line in lines:
                hit = self._table.get(line)
                if hit is None:
                    hit = " ".join(self._lexicon.gloss(line.split())) if self._lexicon else line
                out.append(hit)
            return out
        return self._run_command(lines)

    def _run_command(self, lines):
        if any("\n" in line for line in lines):
            raise ValueError("sentences may not contain newlines")
        argv = shlex.split(self.spec.resource)
        payload = "".join(line + "\n" for line in lines)
        try:
            proc = subprocess.run(argv, input=payload, capture_output=True, text=True,
                                  encoding="utf-8", timeout=self.spec.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BackendUnavailable(f"{argv[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise BackendUnavailable(f"{argv[0]} exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
        out = proc.stdout.split("\n")
        if out and out[-1] == "":
            out.pop()
        if len(out) != len(lines):
            raise MalformedBackendOutput(f"sent {len(lines)} lines, received {len(out)}")
        return out


_REGISTRY: dict = {}
_REGISTRY_LOCK = threading.Lock()


def get_translator(spec: TranslatorSpec) -> Translator:
    with _REGISTRY_LOCK:
        tr = _REGISTRY.get(spec)
        if tr is None:
            tr = _REGISTRY[spec] = Translator(spec)
        return tr


def translate(spec: TranslatorSpec, sentence: Sequence[str]) -> list[str]:
    return get_translator(spec).translate(sentence)


def translate_batch(spec: TranslatorSpec, sentences) -> list[list[str]]:
    sentences = list(sentences)
    if not sentences:
        return []
    return get_translator(spec).translate_batch(sentences)


def pivot_translate(spec_ab: TranslatorSpec, spec_bc: TranslatorSpec, sentence: Sequence[str]) -> list[str]:
    if spec_ab.tgt != spec_bc.src:
        raise PivotMismatch(f"first leg ends in {spec_ab.tgt}, second starts from {spec_bc.src}")
    return translate(spec_bc, translate(spec_ab, sentence))


def pivot_translate_batch(spec_ab, spec_bc, sentences) -> list[list[str]]:
    if spec_ab.tgt != spec_bc.src:
        raise PivotMismatch(f"first leg ends in {spec_ab.tgt}, second starts from {spec_bc.src}")
    return translate_batch(spec_bc, translate_batch(spec_ab, sentences))


def clear_translators() -> None:
    """Forget loaded backends, e.g. after editing a lexicon file on disk."""
    with _REGISTRY_LOCK:
        _REGISTRY.clear()
