"""Text normalization, tokenization, sentence splitting and stemming.

Everything here is a pure function of its inputs plus a set of mapping
tables. The default tables ship as TSV files under ``bitextkit/data``;
:meth:`Tables.from_dir` loads a user-edited copy.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import UnknownLanguage

MIN_STEM = 2


class Lang(str, Enum):
    ZH = "zh"
    PT = "pt"
    EN = "en"

    @classmethod
    def parse(cls, code) -> "Lang":
        if isinstance(code, Lang):
            return code
        try:
            return cls(str(code).strip().lower())
        except ValueError:
            raise UnknownLanguage(f"unsupported language code {code!r}") from None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NormConfig:
    width_fold: bool = True
    unicode_form: bool = True
    zh_variant_fold: bool = True
    punct_normalize: bool = True
    case_fold: bool = True
    stemming: bool = False


def read_tsv_table(path) -> list[tuple[str, str]]:
    """Read a ``source<TAB>target`` table; blank lines and ``#`` comments are skipped."""
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            src, sep, tgt = line.partition("\t")
            if not sep:
                tgt = ""
            if not src:
                raise ValueError(f"{path}:{lineno}: empty source column")
            rows.append((src, tgt))
    return rows


@dataclass(frozen=True)
class Tables:
    width: dict = field(default_factory=dict)
    punct: dict = field(default_factory=dict)
    zh_t2s: dict = field(default_factory=dict)
    abbreviations: dict = field(default_factory=dict)  # lang -> frozenset
    suffixes: dict = field(default_factory=dict)  # lang -> tuple, tried in order

    @classmethod
    def from_dir(cls, directory) -> "Tables":
        """Load tables from ``directory``; any file it lacks comes from the shipped data."""
        directory = Path(directory)

        def table(name):
            path = directory / name
            if not path.exists():
                path = resources.files("bitextkit") / "data" / name
            return read_tsv_table(path)

        def char_map(rows):
            return {ord(s): t for s, t in rows if len(s) == 1}

        suffixes = {}
        for lang in (Lang.PT, Lang.EN):
            rows = table(f"suffix_{lang.value}.tsv")
            if any(t for _, t in rows):
                raise ValueError("suffix tables may only strip, targets must be empty")
            suffixes[lang] = tuple(s for s, _ in rows)
        return cls(
            width=char_map(table("width.tsv")),
            punct=char_map(table("punct.tsv")),
            zh_t2s=char_map(table("zh_t2s.tsv")),
            abbreviations={
                lang: frozenset(s.lower() for s, _ in table(f"abbrev_{lang.value}.tsv"))
                for lang in (Lang.PT, Lang.EN)
            },
            suffixes=suffixes,
        )


@lru_cache(maxsize=1)
def default_tables() -> Tables:
    with resources.as_file(resources.files("bitextkit") / "data") as path:
        return Tables.from_dir(path)


def fold_width(text: str, tables: Tables | None = None) -> str:
    tables = tables or default_tables()
    out = []
    for ch in text:
        cp = ord(ch)
        if 0xFF01 <= cp <= 0xFF5E:
            out.append(chr(cp - 0xFEE0))
        else:
            out.append(tables.width.get(cp, ch))
    return "".join(out)


def normalize(text: str, lang, cfg: NormConfig = NormConfig(), tables: Tables | None = None) -> str:
    lang = Lang.parse(lang)
    tables = tables or default_tables()
    # NFC runs first: composition can map onto characters the later tables rewrite.
    if cfg.unicode_form:
        text = unicodedata.normalize("NFC", text)
    if cfg.width_fold:
        text = fold_width(text, tables)
    if cfg.punct_normalize:
        text = text.translate(tables.punct)
    if cfg.zh_variant_fold and lang is Lang.ZH:
        text = text.translate(tables.zh_t2s)
    if cfg.case_fold and lang is not Lang.ZH:
        text = text.lower()
    return text


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0xF900 <= cp <= 0xFAFF
        or 0x3040 <= cp <= 0x30FF
        or 0x20000 <= cp <= 0x2FFFF
    )


def _is_word_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "LNM" and not is_cjk(ch)


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple
    lang: Lang
    offsets: tuple  # (start, end) per token, into ``text``
    text: str

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def reconstruct(self) -> str:
        parts, prev = [], 0
        for tok, (start, end) in zip(self.tokens, self.offsets):
            parts.append(self.text[prev:start])
            parts.append(tok)
            prev = end
        parts.append(self.text[prev:])
        return "".join(parts)


def _word_end(text: str, i: int, latin_joiners: bool) -> int:
    n = len(text)
    j = i + 1
    while j < n:
        ch = text[j]
        if _is_word_char(ch):
            j += 1
            continue
        if latin_joiners and j + 1 < n and _is_word_char(text[j + 1]):
            if ch in "'-":
                j += 2
                continue
            if ch in ".," and text[j - 1].isdigit() and text[j + 1].isdigit():
                j += 2
                continue
        break
    return j


def tokenize(text: str, lang) -> TokenizedText:
    """Split normalized text into tokens with character offsets.

    Chinese is segmented per CJK character, keeping Latin/digit runs whole.
    Portuguese and English split on whitespace and detach punctuation, but
    keep word-internal apostrophes/hyphens and digit-internal ``.``/``,``.
    """
    lang = Lang.parse(lang)
    latin = lang is not Lang.ZH
    tokens, offsets = [], []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if is_cjk(ch) or not _is_word_char(ch):
            j = i + 1
        else:
            j = _word_end(text, i, latin)
        tokens.append(text[i:j])
        offsets.append((i, j))
        i = j
    return TokenizedText(tuple(tokens), lang, tuple(offsets), text)


_ZH_BOUNDARY = re.compile(r"[。！？；!?;]+[”’\"'）)」』】》]*")
_LATIN_BOUNDARY = re.compile(r"[.!?]+[\"')\]»”’]*(?=\s|$)")


def _preceding_word(text: str, end: int) -> str:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end].lstrip("\"'([«“‘").lower()


def _latin_boundary_ok(text, match, abbreviations) -> bool:
    mark = match.group()
    if mark.startswith(".") and set(mark.rstrip("\"')]»”’")) == {"."}:
        word = _preceding_word(text, match.start())
        if word in abbreviations:
            return False
        if len(word) == 1 and word.isalpha():
            return False  # initials: "J. Silva"
        rest = text[match.end():].lstrip()
        if rest[:1].islower():
            return False
    return True


def split_sentences(text: str, lang, tables: Tables | None = None) -> list[str]:
    lang = Lang.parse(lang)
    tables = tables or default_tables()
    if lang is Lang.ZH:
        cuts = [m.end() for m in _ZH_BOUNDARY.finditer(text)]
    else:
        abbrevs = tables.abbreviations.get(lang, frozenset())
        cuts = [m.end() for m in _LATIN_BOUNDARY.finditer(text) if _latin_boundary_ok(text, m, abbrevs)]
    sentences, prev = [], 0
    for cut in cuts + [len(text)]:
        piece = text[prev:cut].strip()
        if piece:
            sentences.append(piece)
        prev = cut
    return sentences


def stem(token: str, lang, tables: Tables | None = None) -> str:
    lang = Lang.parse(lang)
    if lang is Lang.ZH:
        return token
    tables = tables or default_tables()
    for suffix in tables.suffixes.get(lang, ()):
        if token.endswith(suffix) and len(token) - len(suffix) >= MIN_STEM:
            return token[: -len(suffix)]
    return token


def analyze(text: str, lang, cfg: NormConfig = NormConfig(), tables: Tables | None = None) -> list[str]:
    """normalize -> tokenize -> optional stem, returning the token list."""
    lang = Lang.parse(lang)
    toks = tokenize(normalize(text, lang, cfg, tables), lang).tokens
    if cfg.stemming:
        return [stem(t, lang, tables) for t in toks]
    return list(toks)
