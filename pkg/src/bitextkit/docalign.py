"""Document-level alignment.

Two routes produce :class:`DocPair` links:

* :func:`align_by_url` follows the language-switch links scraped from each
  page.
* :func:`align_documents` handles the rest by cross-lingual retrieval: each
  source document becomes a translated pseudo-query, target documents are
  ranked by TF-IDF cosine, the shortlist is rescored with a mix of TF-IDF
  and word-embedding similarity, and pairs are formed greedily one-to-one.
"""
from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .document import Document, document_id, normalize_url
from .errors import EmptyCollection
from .textnorm import Lang, NormConfig, analyze, stem
from .translator import Lexicon, TranslatorSpec, get_translator, translate_batch


@dataclass(frozen=True)
class DocAlignConfig:
    lam: float = 0.5
    threshold: float = 0.0
    top_n: int = 50
    top_k: int = 30
    date_window_days: int | None = 2
    stem_terms: bool = True
    norm: NormConfig = NormConfig()

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must be within [0, 1]")
        if self.top_n < 1 or self.top_k < 0:
            raise ValueError("top_n must be >= 1 and top_k >= 0")


@dataclass(frozen=True)
class DocPair:
    src_doc_id: str
    tgt_doc_id: str
    score: float
    method: str  # url_rule | retrieval


def is_term(token: str) -> bool:
    return any(ch.isalnum() for ch in token)


def _index_form(term: str, lang: Lang, cfg: DocAlignConfig) -> str:
    return stem(term, lang) if cfg.stem_terms else term


def doc_terms(doc: Document, cfg: DocAlignConfig = DocAlignConfig(), lexicon: Lexicon | None = None,
              for_index: bool = True) -> list[str]:
    """Content terms of a document (title plus paragraphs).

    ``lexicon`` groups Chinese character runs into lexicon words, so source
    terms line up with what the translation backend can gloss.
    """
    tokens = []
    for text in (doc.title, *doc.paragraphs):
        if text:
            tokens.extend(analyze(text, doc.lang, cfg.norm))
    if lexicon is not None and doc.lang is Lang.ZH:
        tokens = lexicon.segment(tokens)
    terms = [t for t in tokens if is_term(t)]
    if for_index:
        terms = [_index_form(t, doc.lang, cfg) for t in terms]
    return terms


# --- vector space model -----------------------------------------------------

@dataclass
class TfIdfIndex:
    lang: Lang
    doc_ids: list
    vocab: dict  # term -> column id
    idf: np.ndarray
    doc_vectors: list  # per document: {term: weight}
    norms: np.ndarray
    postings: dict = field(repr=False, default_factory=dict)  # term -> [(row, weight)]

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def row(self, doc_id: str) -> int:
        return self._rows[doc_id]

    def vector(self, doc_id: str) -> dict:
        return self.doc_vectors[self._rows[doc_id]]

    def idf_of(self, term: str) -> float:
        col = self.vocab.get(term)
        return 0.0 if col is None else float(self.idf[col])

    def weigh(self, terms) -> dict:
        """tf-idf vector of an arbitrary bag of terms under this index's idf."""
        return {t: c * self.idf_of(t) for t, c in Counter(terms).items()}

    def dense(self) -> np.ndarray:
        mat = np.zeros((self.n_docs, len(self.vocab)))
        for r, vec in enumerate(self.doc_vectors):
            for t, w in vec.items():
                mat[r, self.vocab[t]] = w
        return mat

    def __post_init__(self):
        self._rows = {d: i for i, d in enumerate(self.doc_ids)}


def build_tfidf_index(docs, side=None, terms_of=None) -> TfIdfIndex:
    """tf = raw count, idf = ln(n_docs / df); terms present everywhere weigh 0."""
    docs = list(docs)
    if not docs:
        raise EmptyCollection("cannot index an empty collection")
    lang = Lang.parse(side) if side is not None else docs[0].lang
    terms_of = terms_of or doc_terms
    counts = [Counter(terms_of(d)) for d in docs]
    df = Counter()
    for c in counts:
        df.update(c.keys())
    vocab = {t: i for i, t in enumerate(sorted(df))}
    n = len(docs)
    idf = np.zeros(len(vocab))
    for t, i in vocab.items():
        idf[i] = math.log(n / df[t])
    vectors, postings = [], defaultdict(list)
    norms = np.zeros(n)
    for r, c in enumerate(counts):
        vec = {t: tf * idf[vocab[t]] for t, tf in sorted(c.items())}
        vectors.append(vec)
        norms[r] = math.sqrt(math.fsum(w * w for w in vec.values()))
        for t, w in vec.items():
            if w > 0:
                postings[t].append((r, w))
    return TfIdfIndex(lang, [d.id for d in docs], vocab, idf, vectors, norms, dict(postings))


def cosine_similarity(u: dict, v: dict) -> float:
    """dot(u, v) / (|u| |v|) on sparse vectors; 0 when either norm is 0."""
    # rescale first so tiny or huge weights neither underflow nor overflow
    su = max((abs(w) for w in u.values()), default=0.0)
    sv = max((abs(w) for w in v.values()), default=0.0)
    if su == 0.0 or sv == 0.0:
        return 0.0
    u = {t: w / su for t, w in u.items()}
    v = {t: w / sv for t, w in v.items()}
    if len(u) > len(v):
        u, v = v, u
    dot = math.fsum(w * v[t] for t, w in u.items() if t in v)
    nu = math.sqrt(math.fsum(w * w for w in u.values()))
    nv = math.sqrt(math.fsum(w * w for w in v.values()))
    return min(1.0, max(0.0, dot / (nu * nv)))


# --- embeddings -------------------------------------------------------------

class EmbeddingTable:
    def __init__(self, vectors: dict, dim: int | None = None):
        if dim is None:
            dim = len(next(iter(vectors.values()))) if vectors else 0
        self.dim = dim
        self.vectors = {}
        for word, vec in vectors.items():
            arr = np.asarray(vec, dtype=float)
            if arr.shape != (dim,):
                raise ValueError(f"vector for {word!r} has shape {arr.shape}, expected ({dim},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {word!r} has non-finite components")
            self.vectors[word] = arr

    def __contains__(self, word):
        return word in self.vectors

    def __len__(self):
        return len(self.vectors)

    def centroid(self, terms):
        vecs = [self.vectors[t] for t in sorted(set(terms)) if t in self.vectors]
        if not vecs:
            return None
        return np.mean(vecs, axis=0)

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        vectors = {}
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}:1: expected '<count> <dim>' header")
            count, dim = int(header[0]), int(header[1])
            for lineno, line in enumerate(f, 2):
                parts = line.rstrip("\n").split(" ")
                if not parts or parts == [""]:
                    continue
                if len(parts) != dim + 1:
                    raise ValueError(f"{path}:{lineno}: expected {dim} components")
                vectors[parts[0]] = [float(x) for x in parts[1:]]
        if len(vectors) != count:
            raise ValueError(f"{path}: header announces {count} vectors, found {len(vectors)}")
        return cls(vectors, dim)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{len(self.vectors)} {self.dim}\n")
            for word in sorted(self.vectors):
                f.write(word + " " + " ".join(repr(float(x)) for x in self.vectors[word]) + "\n")


def _cos(a, b) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def embedding_similarity(query, doc, emb: EmbeddingTable, doc_term_list=None) -> float:
    """Cosine between the mean vectors of in-vocabulary query and document terms."""
    q = emb.centroid(query)
    if doc_term_list is None:
        doc_term_list = doc_terms(doc, for_index=False) if isinstance(doc, Document) else doc
    d = emb.centroid(doc_term_list)
    if q is None or d is None:
        return 0.0
    return _cos(q, d)


# --- pseudo-queries ---------------------------------------------------------

def _backend_lexicon(backend) -> Lexicon | None:
    if isinstance(backend, Lexicon):
        return backend
    if isinstance(backend, TranslatorSpec) and backend.kind in ("lexicon", "cached_table"):
        return get_translator(backend)._lexicon
    return None


def _translate_terms(terms, backend) -> list:
    """Gloss each term; ``None`` marks an untranslatable one."""
    lex = _backend_lexicon(backend)
    if isinstance(backend, Lexicon) or (lex is not None and backend.kind == "lexicon"):
        return [lex.lookup(t) for t in terms]
    out = translate_batch(backend, [[t] for t in terms])
    return [o if o else None for o in out]


def make_pseudo_query(src_doc: Document, backend, top_k: int, index: TfIdfIndex | None = None,
                      cfg: DocAlignConfig = DocAlignConfig(), with_weights: bool = False):
    """Top ``top_k`` source terms by tf-idf, translated, in descending weight order.

    Returns the translated term list, or ``(term, weight)`` tuples with
    ``with_weights``. Without ``index`` the document is weighed on its own
    (idf = 1 for every term).
    """
    if top_k <= 0:
        return []
    lex = _backend_lexicon(backend)
    terms = doc_terms(src_doc, cfg, lexicon=lex, for_index=False)
    tf = Counter(terms)
    if index is not None:
        weights = {t: c * index.idf_of(_index_form(t, src_doc.lang, cfg)) for t, c in tf.items()}
    else:
        weights = dict(tf)
    ranked = sorted(weights, key=lambda t: (-weights[t], t))[:top_k]
    query = []
    for term, gloss in zip(ranked, _translate_terms(ranked, backend)):
        if gloss is None:
            continue
        for g in gloss:
            query.append((g, weights[term]))
    return query if with_weights else [g for g, _ in query]


# --- alignment --------------------------------------------------------------

def align_by_url(pages, src_lang=Lang.ZH) -> list[DocPair]:
    """Pair pages whose language-switch link resolves to a crawled page in the other language.

    ``pages`` holds ``(url, lang, switch_url)`` triples or :class:`Document` objects.
    """
    src_lang = Lang.parse(src_lang)
    rows = []
    for p in pages:
        if isinstance(p, Document):
            rows.append((p.source_url, p.lang, p.switch_url))
        else:
            url, lang, switch = p
            rows.append((url, Lang.parse(lang), switch))
    by_url = {}
    for url, lang, _ in rows:
        by_url.setdefault(normalize_url(url), lang)
    used, pairs = set(), []
    for url, lang, switch in sorted(rows, key=lambda r: (normalize_url(r[0]), r[1].value)):
        if not switch:
            continue
        a = (normalize_url(url), lang)
        target = normalize_url(switch)
        other = by_url.get(target)
        if other is None or other == lang:
            continue
        b = (target, other)
        src, tgt = (a, b) if lang is src_lang else (b, a)
        if src[1] is not src_lang:
            continue
        if src in used or tgt in used:
            continue  # covers the reverse link and any second claimant
        used.update((src, tgt))
        pairs.append(DocPair(document_id(*src), document_id(*tgt), 1.0, "url_rule"))
    return pairs


def _date_ok(a: Document, b: Document, window) -> bool:
    if window is None or a.date is None or b.date is None:
        return True
    return abs((a.date - b.date).days) <= window


def greedy_match(scored, threshold: float = float("-inf")) -> list:
    """One-to-one pairs by descending score, ties by (src_id, tgt_id)."""
    used_s, used_t, out = set(), set(), []
    for score, s, t in sorted(scored, key=lambda x: (-x[0], x[1], x[2])):
        if score < threshold:
            break
        if s in used_s or t in used_t:
            continue
        used_s.add(s)
        used_t.add(t)
        out.append((score, s, t))
    return out


def score_candidates(src_docs, tgt_docs, backend, emb: EmbeddingTable | None = None,
                     cfg: DocAlignConfig = DocAlignConfig()) -> list:
    """``(combined, src_id, tgt_id)`` for every shortlisted candidate pair."""
    src_docs, tgt_docs = list(src_docs), list(tgt_docs)
    if not src_docs or not tgt_docs:
        raise EmptyCollection("both collections must be non-empty")
    lex = _backend_lexicon(backend)
    src_index = build_tfidf_index(src_docs, terms_of=lambda d: doc_terms(d, cfg, lexicon=lex))
    tgt_index = build_tfidf_index(tgt_docs, terms_of=lambda d: doc_terms(d, cfg))
    tgt_by_row = tgt_docs
    tgt_plain = [doc_terms(d, cfg, for_index=False) for d in tgt_docs] if emb is not None else None

    scored = []
    for src in src_docs:
        query = make_pseudo_query(src, backend, cfg.top_k, src_index, cfg, with_weights=True)
        qvec = defaultdict(float)
        for g, w in query:
            qvec[_index_form(g, tgt_index.lang, cfg)] += w
        qnorm = math.sqrt(math.fsum(w * w for w in qvec.values()))
        dots = defaultdict(float)
        for term, qw in qvec.items():
            for row, dw in tgt_index.postings.get(term, ()):
                dots[row] += qw * dw
        cands = []
        for row in range(tgt_index.n_docs):
            if not _date_ok(src, tgt_by_row[row], cfg.date_window_days):
                continue
            denom = qnorm * tgt_index.norms[row]
            cos = min(1.0, dots.get(row, 0.0) / denom) if denom > 0 else 0.0
            cands.append((cos, tgt_index.doc_ids[row], row))
        cands.sort(key=lambda c: (-c[0], c[1]))
        qterms = [g for g, _ in query]
        for cos, tgt_id, row in cands[: cfg.top_n]:
            if emb is None:
                combined = cos
            else:
                esim = embedding_similarity(qterms, None, emb, doc_term_list=tgt_plain[row])
                combined = cfg.lam * cos + (1.0 - cfg.lam) * esim
            scored.append((combined, src.id, tgt_id))
    return scored


def align_documents(src_docs, tgt_docs, backend, emb: EmbeddingTable | None = None,
                    cfg: DocAlignConfig = DocAlignConfig()) -> list[DocPair]:
    """Retrieval-based one-to-one document alignment.

    combined = lam * tfidf_cosine + (1 - lam) * embedding_similarity over the
    ``top_n`` TF-IDF shortlist of each source document; without an embedding
    table the TF-IDF cosine is used alone.
    """
    scored = score_candidates(src_docs, tgt_docs, backend, emb, cfg)
    return [DocPair(s, t, score, "retrieval") for score, s, t in greedy_match(scored, cfg.threshold)]


def write_doc_pairs(pairs, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        for p in pairs:
            w.writerow([p.src_doc_id, p.tgt_doc_id, repr(float(p.score)), p.method])


def read_doc_pairs(path) -> list[DocPair]:
    with open(path, encoding="utf-8", newline="") as f:
        return [DocPair(r[0], r[1], float(r[2]), r[3]) for r in csv.reader(f, delimiter="\t") if r]
