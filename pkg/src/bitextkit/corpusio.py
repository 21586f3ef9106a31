"""Sentence-pair corpora on disk (TSV, JSONL, TMX), statistics, and QA sampling."""
from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import EmptyCorpus, MalformedFile, SampleTooLarge

FORMATS = ("tsv", "jsonl", "tmx", "doc-tsv")
XML_LANG = "{http://www.w3.org/XML/1998/namespace}lang"


@dataclass(frozen=True)
class SentencePair:
    src: str
    tgt: str
    score: float = 1.0
    method: str = ""
    doc_pair_id: str = ""
    src_span: tuple | None = None
    tgt_span: tuple | None = None

    def to_dict(self) -> dict:
        return {
            "doc_pair_id": self.doc_pair_id,
            "src": self.src,
            "tgt": self.tgt,
            "score": self.score,
            "method": self.method,
            "src_span": list(self.src_span) if self.src_span is not None else None,
            "tgt_span": list(self.tgt_span) if self.tgt_span is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SentencePair":
        span = lambda v: tuple(v) if v is not None else None  # noqa: E731
        return cls(d["src"], d["tgt"], float(d.get("score", 1.0)), d.get("method", ""),
                   d.get("doc_pair_id", ""), span(d.get("src_span")), span(d.get("tgt_span")))


# --- TSV --------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def tsv_escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def tsv_unescape(text: str) -> str:
    out, i, n = [], 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\\":
            if i + 1 >= n or text[i + 1] not in _UNESCAPES:
                raise ValueError(f"bad escape at column {i + 1}")
            out.append(_UNESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _write_tsv(pairs, f, with_doc: bool):
    for p in pairs:
        cols = [tsv_escape(p.src), tsv_escape(p.tgt), repr(float(p.score)), tsv_escape(p.method)]
        if with_doc:
            cols.insert(0, tsv_escape(p.doc_pair_id))
        f.write("\t".join(cols) + "\n")


def _read_tsv(path, f, with_doc: bool):
    width = 5 if with_doc else 4
    out = []
    for lineno, line in enumerate(f, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != width:
            raise MalformedFile(path, f"line {lineno}", f"expected {width} columns, found {len(cols)}")
        try:
            doc = tsv_unescape(cols.pop(0)) if with_doc else ""
            src, tgt, score, method = cols
            out.append(SentencePair(tsv_unescape(src), tsv_unescape(tgt), float(score), tsv_unescape(method), doc))
        except ValueError as exc:
            raise MalformedFile(path, f"line {lineno}", str(exc)) from exc
    return out


# --- TMX --------------------------------------------------------------------

_XML_BAD = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f\ufffe\uffff]")
CODEPOINT_PH = "x-codepoint"


def xml_escape(text: str, attr: bool = False) -> str:
    if _XML_BAD.search(text):
        raise ValueError("text contains characters XML 1.0 cannot represent")
    text = text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace("\r", "&#13;")
    if attr:
        text = text.replace('"', "&quot;").replace("\n", "&#10;").replace("\t", "&#9;")
    return text


def seg_markup(text: str) -> str:
    """Segment content; characters XML cannot hold become ``<ph>`` placeholders."""
    out, last = [], 0
    for m in _XML_BAD.finditer(text):
        out.append(xml_escape(text[last:m.start()]))
        out.append(f'<ph type="{CODEPOINT_PH}">{ord(m.group()):04X}</ph>')
        last = m.end()
    out.append(xml_escape(text[last:]))
    return "".join(out)


def seg_text(seg) -> str:
    parts = [seg.text or ""]
    for child in seg:
        if child.tag == "ph" and child.get("type") == CODEPOINT_PH:
            parts.append(chr(int(child.text, 16)))
        else:
            parts.append("".join(child.itertext()))
        parts.append(child.tail or "")
    return "".join(parts)


def _write_tmx(pairs, f, src_lang, tgt_lang):
    f.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    f.write('<tmx version="1.4">\n')
    f.write(f'  <header creationtool="bitextkit" creationtoolversion="{__version__}" datatype="plaintext" '
            f'segtype="sentence" adminlang="en" srclang="{src_lang}" o-tmf="bitextkit"/>\n')
    f.write("  <body>\n")
    for p in pairs:
        f.write("    <tu>\n")
        f.write(f'      <prop type="x-score">{p.score!r}</prop>\n')
        f.write(f'      <prop type="x-method">{xml_escape(p.method)}</prop>\n')
        if p.doc_pair_id:
            f.write(f'      <prop type="x-doc-pair">{xml_escape(p.doc_pair_id)}</prop>\n')
        for name, span in (("x-src-span", p.src_span), ("x-tgt-span", p.tgt_span)):
            if span is not None:
                f.write(f'      <prop type="{name}">{span[0]} {span[1]}</prop>\n')
        f.write(f'      <tuv xml:lang="{src_lang}"><seg>{seg_markup(p.src)}</seg></tuv>\n')
        f.write(f'      <tuv xml:lang="{tgt_lang}"><seg>{seg_markup(p.tgt)}</seg></tuv>\n')
        f.write("    </tu>\n")
    f.write("  </body>\n</tmx>\n")


def _read_tmx(path, src_lang, tgt_lang):
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        line, col = exc.position
        raise MalformedFile(path, f"line {line}, column {col}", "not well-formed XML") from exc
    body = root.find("body")
    if root.tag != "tmx" or body is None:
        raise MalformedFile(path, "root", "missing <tmx>/<body>")
    out = []
    for k, tu in enumerate(body.iter("tu"), 1):
        props = {p.get("type"): p.text or "" for p in tu.findall("prop")}
        segs = {}
        for tuv in tu.findall("tuv"):
            seg = tuv.find("seg")
            segs[tuv.get(XML_LANG) or tuv.get("lang")] = seg_text(seg) if seg is not None else ""
        if src_lang not in segs or tgt_lang not in segs:
            raise MalformedFile(path, f"tu {k}", f"needs <tuv> for {src_lang} and {tgt_lang}")

        def span(key):
            return tuple(int(x) for x in props[key].split()) if key in props else None

        out.append(SentencePair(segs[src_lang], segs[tgt_lang], float(props.get("x-score", 1.0)),
                                props.get("x-method", ""), props.get("x-doc-pair", ""),
                                span("x-src-span"), span("x-tgt-span")))
    return out


# --- dispatch ---------------------------------------------------------------

def write_corpus(pairs, fmt: str, path, src_lang: str = "zh", tgt_lang: str = "pt") -> int:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    pairs = list(pairs)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if fmt == "tsv":
            _write_tsv(pairs, f, with_doc=False)
        elif fmt == "doc-tsv":
            _write_tsv(pairs, f, with_doc=True)
        elif fmt == "jsonl":
            for p in pairs:
                f.write(json.dumps(p.to_dict(), ensure_ascii=False) + "\n")
        else:
            _write_tmx(pairs, f, src_lang, tgt_lang)
    return len(pairs)


def read_corpus(path, fmt: str, src_lang: str = "zh", tgt_lang: str = "pt") -> list[SentencePair]:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "tmx":
        return _read_tmx(path, src_lang, tgt_lang)
    with open(path, encoding="utf-8", newline="\n") as f:
        if fmt in ("tsv", "doc-tsv"):
            return _read_tsv(path, f, with_doc=fmt == "doc-tsv")
        out = []
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(SentencePair.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedFile(path, f"line {lineno}", str(exc)) from exc
        return out


# --- statistics and sampling ------------------------------------------------

@dataclass(frozen=True)
class CorpusStats:
    n_sentences: int
    n_words: tuple  # (src, tgt)
    vocab: tuple
    mean_len: tuple  # exact Fractions, |W| / |S|

    def to_dict(self) -> dict:
        return {
            "sentences": self.n_sentences,
            "words": list(self.n_words),
            "vocab": list(self.vocab),
            "mean_len": [float(x) for x in self.mean_len],
        }


def compute_stats(pairs) -> CorpusStats:
    """Table-style counts over ``(src_tokens, tgt_tokens)`` pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyCorpus("no pairs to count")
    words, vocab = [0, 0], [set(), set()]
    for side_tokens in pairs:
        for k in (0, 1):
            toks = side_tokens[k]
            words[k] += len(toks)
            vocab[k].update(toks)
    n = len(pairs)
    return CorpusStats(n, tuple(words), (len(vocab[0]), len(vocab[1])),
                       (Fraction(words[0], n), Fraction(words[1], n)))


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 seeded with ``seed``; sampling draws one permutation from it."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_indices(size: int, n: int, seed: int) -> list[int]:
    if n > size:
        raise SampleTooLarge(f"asked for {n} of {size} pairs")
    if n < 0:
        raise ValueError("n must be >= 0")
    return [int(i) for i in make_rng(seed).permutation(size)[:n]]


def sample_for_qa(pairs, n: int, seed: int) -> list:
    pairs = list(pairs)
    return [pairs[i] for i in sample_indices(len(pairs), n, seed)]


def write_review_sheet(sample, path) -> None:
    """Numbered TSV for manual checking; the verdict column is left empty."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("no\tsrc\ttgt\tscore\tmethod\tverdict\n")
        for k, p in enumerate(sample, 1):
            f.write(f"{k}\t{tsv_escape(p.src)}\t{tsv_escape(p.tgt)}\t{p.score!r}\t{tsv_escape(p.method)}\t\n")


def dedup_pairs(pairs) -> list:
    """Drop exact (src, tgt) duplicates, keeping the first occurrence."""
    seen, out = set(), []
    for p in pairs:
        key = (p.src, p.tgt)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def split_corpus(pairs, dev: int, test: int, seed: int):
    """Seeded train/dev/test split with user-chosen dev and test sizes."""
    pairs = list(pairs)
    order = sample_indices(len(pairs), len(pairs), seed) if pairs else []
    if dev + test > len(pairs):
        raise SampleTooLarge(f"dev+test={dev + test} exceeds {len(pairs)} pairs")
    dev_idx, test_idx = order[:dev], order[dev:dev + test]
    held = set(dev_idx) | set(test_idx)
    train = [p for i, p in enumerate(pairs) if i not in held]
    return train, [pairs[i] for i in sorted(dev_idx)], [pairs[i] for i in sorted(test_idx)]


def method_counts(pairs) -> dict:
    return dict(sorted(Counter(p.method for p in pairs).items()))
