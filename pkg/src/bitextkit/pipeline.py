"""Stage orchestration over file artifacts in the configured work directory.

Artifacts, in stage order::

    crawl       pages.jsonl, frontier-<site>.tsv
    extract     documents.jsonl
    align-docs  doc_pairs.tsv
    align-paras paragraphs.jsonl
    align-sents sentences.jsonl, sentences.tsv
    export      corpus.<fmt> for each configured format

Every stage rewrites its outputs from its inputs, sorted, so re-running a
stage on unchanged inputs reproduces its files byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PipelineConfig
from .corpusio import SentencePair, compute_stats, dedup_pairs, method_counts, read_corpus, write_corpus
from .docalign import EmbeddingTable, align_by_url, align_documents, read_doc_pairs, write_doc_pairs
from .document import url_host
from .errors import EmptyCollection, ExtractionFailed, MissingInput
from .hieralign import LengthModel, finish, paragraph_tokens, prepare, span_text
from .ingest import Frontier, SiteRules, crawl, extract_document, load_documents, load_pages
from .textnorm import analyze, split_sentences

log = logging.getLogger(__name__)

STAGES = ("crawl", "extract", "align-docs", "align-paras", "align-sents", "export")

PAGES = "pages.jsonl"
DOCUMENTS = "documents.jsonl"
DOC_PAIRS = "doc_pairs.tsv"
PARAGRAPHS = "paragraphs.jsonl"
SENTENCES = "sentences.jsonl"
SENTENCES_TSV = "sentences.tsv"
REPORT = "report.json"


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _atomic_lines(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")
    os.replace(tmp, path)


def _dump(rec) -> str:
    return json.dumps(rec, ensure_ascii=False, sort_keys=True)


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingInput(f"{stage} needs {path.name}; run the earlier stages first")
    return path


def _read_records(path: Path) -> list:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _report(stage, cfg, inputs, outputs, methods=None, **extra) -> dict:
    rep = {"stage": stage, "in": inputs, "out": outputs, "methods": dict(sorted((methods or {}).items()))}
    rep["digests"] = {name: digest(cfg.workdir / name) for name in sorted(outputs) if (cfg.workdir / name).exists()}
    rep.update(extra)
    return rep


def doc_pair_id(src_id: str, tgt_id: str) -> str:
    return f"{src_id}-{tgt_id}"


# --- stages -----------------------------------------------------------------

def stage_crawl(cfg: PipelineConfig) -> dict:
    out = cfg.workdir / PAGES
    pages = {p.url: p for p in load_pages(out)} if out.exists() else {}
    fetched = 0
    for site in cfg.sites:
        rules = SiteRules.load(site)
        frontier = Frontier(cfg.workdir / f"frontier-{rules.name}.tsv")
        cfg.workdir.mkdir(parents=True, exist_ok=True)
        for page in crawl(rules, frontier=frontier):
            pages[page.url] = page
            fetched += 1
    _atomic_lines(out, (_dump(pages[u].to_dict()) for u in sorted(pages)))
    # fetched varies between a first run and a resumed one, so it is logged rather than reported
    log.info("crawl fetched %d new pages", fetched)
    statuses = Counter(str(p.status) for p in pages.values())
    return _report("crawl", cfg, {"sites": len(cfg.sites)}, {PAGES: len(pages)}, statuses)


def stage_extract(cfg: PipelineConfig) -> dict:
    pages = load_pages(_need(cfg.workdir / PAGES, "extract"))
    rules = [SiteRules.load(s) for s in cfg.sites]
    docs, failed, skipped = {}, 0, 0
    for page in sorted(pages, key=lambda p: p.url):
        site = next((r for r in rules if url_host(page.url) in r.hosts), None)
        if site is None or page.status != 200 or not site.is_article(page.url):
            skipped += 1
            continue
        try:
            doc = extract_document(page, site)
        except ExtractionFailed as exc:
            log.warning("%s", exc)
            failed += 1
            continue
        if doc.lang in (cfg.src, cfg.tgt):
            docs[doc.id] = doc
        else:
            skipped += 1
    _atomic_lines(cfg.workdir / DOCUMENTS, (_dump(docs[k].to_dict()) for k in sorted(docs)))
    by_lang = Counter(d.lang.value for d in docs.values())
    return _report("extract", cfg, {PAGES: len(pages)}, {DOCUMENTS: len(docs)}, by_lang,
                   failed=failed, skipped=skipped)


def stage_align_docs(cfg: PipelineConfig) -> dict:
    docs = load_documents(_need(cfg.workdir / DOCUMENTS, "align-docs"))
    src_docs = sorted((d for d in docs if d.lang is cfg.src), key=lambda d: d.id)
    tgt_docs = sorted((d for d in docs if d.lang is cfg.tgt), key=lambda d: d.id)
    pairs = align_by_url(docs, cfg.src) if cfg.url_rule else []
    used = {p.src_doc_id for p in pairs} | {p.tgt_doc_id for p in pairs}
    rest_src = [d for d in src_docs if d.id not in used]
    rest_tgt = [d for d in tgt_docs if d.id not in used]
    if rest_src and rest_tgt:
        emb = EmbeddingTable.load(cfg.embeddings) if cfg.embeddings else None
        pairs += align_documents(rest_src, rest_tgt, cfg.bootstrap, emb, cfg.docalign)
    elif not pairs:
        raise EmptyCollection("no documents on one side of the language pair")
    pairs.sort(key=lambda p: (p.src_doc_id, p.tgt_doc_id))
    write_doc_pairs(pairs, cfg.workdir / DOC_PAIRS)
    return _report("align-docs", cfg, {cfg.src.value: len(src_docs), cfg.tgt.value: len(tgt_docs)},
                   {DOC_PAIRS: len(pairs)}, Counter(p.method for p in pairs))


def _documents_for_pairs(cfg: PipelineConfig, stage: str):
    pairs = read_doc_pairs(_need(cfg.workdir / DOC_PAIRS, stage))
    docs = {d.id: d for d in load_documents(_need(cfg.workdir / DOCUMENTS, stage))}
    missing = sorted({i for p in pairs for i in (p.src_doc_id, p.tgt_doc_id)} - set(docs))
    if missing:
        raise MissingInput(f"{len(missing)} paired document(s) are absent from {DOCUMENTS}, e.g. {missing[0]}")
    return pairs, docs


def _align_jobs(cfg: PipelineConfig, units, level: str):
    """Two passes: find anchors everywhere, then fill gaps with a run-wide length fallback."""
    hier = cfg.hieralign
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        jobs = list(pool.map(lambda u: prepare(u[0], u[1], cfg.align_spec, hier, level), units))
    anchors = [ab for job in jobs for ab in job.anchor_lengths()]
    fallback = LengthModel.estimate(anchors, min_pairs=hier.min_anchors)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda j: finish(j, hier, fallback), jobs))


def stage_align_paras(cfg: PipelineConfig) -> dict:
    pairs, docs = _documents_for_pairs(cfg, "align-paras")
    work, ids, skipped = [], [], 0
    for p in pairs:
        s, t = docs[p.src_doc_id], docs[p.tgt_doc_id]
        if not s.paragraphs or not t.paragraphs:
            skipped += 1
            continue
        work.append((paragraph_tokens(s, cfg.hieralign), paragraph_tokens(t, cfg.hieralign)))
        ids.append((s, t))
    records, methods = [], Counter()
    for (s, t), result in zip(ids, _align_jobs(cfg, work, "paragraph")):
        for up in result:
            methods[up.method] += 1
            records.append({
                "doc_pair_id": doc_pair_id(s.id, t.id),
                "src_span": list(up.src_span), "tgt_span": list(up.tgt_span),
                "src": span_text(s.paragraphs, up.src_span), "tgt": span_text(t.paragraphs, up.tgt_span),
                "score": up.score, "method": up.method,
            })
    _atomic_lines(cfg.workdir / PARAGRAPHS, (_dump(r) for r in records))
    return _report("align-paras", cfg, {DOC_PAIRS: len(pairs)}, {PARAGRAPHS: len(records)}, methods,
                   skipped=skipped)


def _sentences(doc, lang, p0, p1):
    """Sentences of paragraphs [p0, p1) and the document-level index of the first one."""
    offset = sum(len(split_sentences(p, lang)) for p in doc.paragraphs[:p0])
    sents = [s for p in doc.paragraphs[p0:p1] for s in split_sentences(p, lang)]
    return offset, sents


def stage_align_sents(cfg: PipelineConfig) -> dict:
    pairs, docs = _documents_for_pairs(cfg, "align-sents")
    by_id = {doc_pair_id(p.src_doc_id, p.tgt_doc_id): p for p in pairs}
    paras = _read_records(_need(cfg.workdir / PARAGRAPHS, "align-sents"))
    work, meta, skipped = [], [], 0
    norm = cfg.hieralign.norm
    for rec in paras:
        dp = by_id.get(rec["doc_pair_id"])
        if dp is None:
            raise MissingInput(f"{PARAGRAPHS} refers to unknown document pair {rec['doc_pair_id']}")
        s_off, s_sents = _sentences(docs[dp.src_doc_id], cfg.src, *rec["src_span"])
        t_off, t_sents = _sentences(docs[dp.tgt_doc_id], cfg.tgt, *rec["tgt_span"])
        if not s_sents or not t_sents:
            skipped += 1
            continue
        work.append(([analyze(x, cfg.src, norm) for x in s_sents], [analyze(x, cfg.tgt, norm) for x in t_sents]))
        meta.append((rec["doc_pair_id"], s_off, s_sents, t_off, t_sents))
    out, methods = [], Counter()
    for (dp_id, s_off, s_sents, t_off, t_sents), result in zip(meta, _align_jobs(cfg, work, "sentence")):
        for up in result:
            methods[up.method] += 1
            out.append(SentencePair(
                span_text(s_sents, up.src_span), span_text(t_sents, up.tgt_span), up.score, up.method, dp_id,
                (s_off + up.src_span[0], s_off + up.src_span[1]),
                (t_off + up.tgt_span[0], t_off + up.tgt_span[1]),
            ))
    write_corpus(out, "jsonl", cfg.workdir / SENTENCES)
    write_corpus(out, "doc-tsv", cfg.workdir / SENTENCES_TSV)
    return _report("align-sents", cfg, {PARAGRAPHS: len(paras)}, {SENTENCES: len(out), SENTENCES_TSV: len(out)},
                   methods, skipped=skipped)


def corpus_tokens(pairs, cfg: PipelineConfig) -> list:
    return [(analyze(p.src, cfg.src, cfg.norm), analyze(p.tgt, cfg.tgt, cfg.norm)) for p in pairs]


def stage_export(cfg: PipelineConfig) -> dict:
    path = cfg.workdir / SENTENCES
    pairs = read_corpus(_need(path, "export"), "jsonl") if path.exists() else []
    if not pairs:
        raise MissingInput("export found no aligned sentence pairs")
    n_in = len(pairs)
    if cfg.dedup:
        pairs = dedup_pairs(pairs)
    outputs = {}
    for fmt in cfg.formats:
        name = f"corpus.{'tsv' if fmt == 'doc-tsv' else fmt}"
        write_corpus(pairs, fmt, cfg.workdir / name, cfg.src.value, cfg.tgt.value)
        outputs[name] = len(pairs)
    stats = compute_stats(corpus_tokens(pairs, cfg))
    return _report("export", cfg, {SENTENCES: n_in}, outputs, method_counts(pairs), stats=stats.to_dict())


RUNNERS = {
    "crawl": stage_crawl,
    "extract": stage_extract,
    "align-docs": stage_align_docs,
    "align-paras": stage_align_paras,
    "align-sents": stage_align_sents,
    "export": stage_export,
}


def run_stage(stage: str, cfg: PipelineConfig) -> dict:
    if stage not in RUNNERS:
        raise ValueError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    cfg.workdir.mkdir(parents=True, exist_ok=True)
    return RUNNERS[stage](cfg)


def run_all(cfg: PipelineConfig, stages=STAGES) -> dict:
    """Run ``stages`` in order, stopping at the first error; writes ``report.json``."""
    reports = [run_stage(s, cfg) for s in stages]
    full = {"config_version": 1, "stages": reports}
    export = next((r for r in reports if r["stage"] == "export"), None)
    if export is not None:
        full["stats"] = export["stats"]
    (cfg.workdir / REPORT).write_text(json.dumps(full, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return full


def summary(report: dict) -> str:
    """Short human-readable rendering of a stage or full report."""
    stages = report.get("stages", [report])
    lines = []
    for r in stages:
        outs = ", ".join(f"{k}={v}" for k, v in r["out"].items())
        meth = ", ".join(f"{k}:{v}" for k, v in r["methods"].items())
        lines.append(f"{r['stage']:<12} {outs}" + (f"  [{meth}]" if meth else ""))
    stats = report.get("stats")
    if stats:
        lines.append(
            f"corpus       |S|={stats['sentences']} |W|={stats['words'][0]}/{stats['words'][1]} "
            f"|V|={stats['vocab'][0]}/{stats['vocab'][1]} "
            f"|L|={stats['mean_len'][0]:.2f}/{stats['mean_len'][1]:.2f}"
        )
    return "\n".join(lines)
