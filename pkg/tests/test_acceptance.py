"""Acceptance suite: twelve scaled-down checks of the whole toolkit.

Each test records one PASS/FAIL line; the lines are printed together when
the module finishes (also visible without ``-s``).
"""
import json
import math
import random
import shutil
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import oracles
from synthetic import generate
from bitextkit.config import load_config, validate
from bitextkit.corpusio import SentencePair, compute_stats, read_corpus, write_corpus
from bitextkit.docalign import cosine_similarity, read_doc_pairs
from bitextkit.document import Document
from bitextkit.errors import PivotMismatch
from bitextkit.hieralign import HierConfig, align_paragraphs, bleu_gap_dp, compute_bleu_matrix, find_anchors, BleuMatrix
from bitextkit.metrics import ALIGN_BLEU, BleuConfig, binomial_two_sided, corpus_bleu, sentence_bleu
from bitextkit.pipeline import DOCUMENTS, SENTENCES, run_all
from bitextkit.subword import apply_bpe, learn_bpe, undo_bpe, vocab_report
from bitextkit.translator import TranslatorSpec, pivot_translate, pivot_translate_batch, translate, translate_batch

RESULTS = {}


@pytest.fixture(scope="module", autouse=True)
def print_results(request):
    yield
    lines = [f"acceptance {k:>2} {status}  {detail}" for k, (status, detail) in sorted(RESULTS.items())]
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line("")
        for line in lines:
            reporter.write_line(line)
    else:
        print("\n".join(lines))


@contextmanager
def criterion(k, name):
    info = {}
    try:
        yield info
    except BaseException:
        RESULTS[k] = ("FAIL", f"{name} {info.get('detail', '')}".rstrip())
        raise
    RESULTS[k] = ("PASS", f"{name} {info.get('detail', '')}".rstrip())


# 1 -----------------------------------------------------------------------------

def test_01_synthetic_recovery(tmp_path):
    with criterion(1, "synthetic bitext recovery") as info:
        t0 = time.perf_counter()
        corpus = generate(200, seed=0, drop=0.1, split=0.1)
        corpus.write_lexicon(tmp_path / "lex.tsv")
        work = tmp_path / "work"
        work.mkdir()
        with open(work / DOCUMENTS, "w", encoding="utf-8") as f:
            for doc in corpus.src_docs + corpus.tgt_docs:
                f.write(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n")
        cfg = validate({"config_version": 1, "workdir": "work", "export": {"formats": ["jsonl"]},
                        "translator": {"bootstrap": {"kind": "lexicon", "resource": "lex.tsv"}}}, tmp_path)
        run_all(cfg, stages=("align-docs", "align-paras", "align-sents", "export"))
        elapsed = time.perf_counter() - t0

        docs = {(p.src_doc_id, p.tgt_doc_id) for p in read_doc_pairs(work / "doc_pairs.tsv")}
        doc_precision = len(docs & corpus.gold_docs) / len(docs)
        got = set()
        for p in read_corpus(work / SENTENCES, "jsonl"):
            src_id, tgt_id = p.doc_pair_id.split("-")
            got.add((src_id, tgt_id, p.src_span, p.tgt_span))
        hits = len(got & corpus.gold_sents)
        precision, recall = hits / len(got), hits / len(corpus.gold_sents)
        info["detail"] = (f"doc P={doc_precision:.3f} sent P={precision:.3f} R={recall:.3f} "
                          f"({len(corpus.gold_sents)} gold) in {elapsed:.1f}s")
        assert doc_precision >= 0.98
        assert precision >= 0.95 and recall >= 0.95
        assert elapsed < 60


# 2 -----------------------------------------------------------------------------

def test_02_count_rule_exactness():
    with criterion(2, "count-rule exactness") as info:
        rng = random.Random(2)
        spec = TranslatorSpec("identity", "zh", "pt")
        cfg = HierConfig(count_rule_filter=False)
        deviations = 0
        for d in range(1000):
            n = rng.randint(1, 12)
            src = Document.create(f"http://x/zh/{d}", "zh", "", ["".join(rng.choices("澳门政府经济增长旅客", k=rng.randint(1, 20)))
                                                                  for _ in range(n)])
            tgt = Document.create(f"http://x/pt/{d}", "pt", "", [" ".join(rng.choices(["a", "b", "c"], k=rng.randint(1, 9)))
                                                                  for _ in range(n)])
            pairs = align_paragraphs(src, tgt, spec, cfg)
            expected = [((k, k + 1), (k, k + 1), "count_rule") for k in range(n)]
            deviations += [(p.src_span, p.tgt_span, p.method) for p in pairs] != expected
        info["detail"] = f"{deviations} deviations in 1000 documents"
        assert deviations == 0


# 3 -----------------------------------------------------------------------------

def random_tokens(rng, lo=1, hi=25):
    return [rng.choice("a b c d e f g h A B".split()) for _ in range(rng.randint(lo, hi))]


def test_03_bleu_oracle_equivalence():
    with criterion(3, "BLEU oracle equivalence") as info:
        rng = random.Random(3)
        worst = 0.0
        pairs = [(random_tokens(rng), random_tokens(rng)) for _ in range(500)]
        for hyp, ref in pairs:
            for smooth, cfg in ((False, BleuConfig()), (True, ALIGN_BLEU)):
                worst = max(worst, abs(sentence_bleu(hyp, ref, cfg).score - oracles.bleu(hyp, ref, 4, smooth)))
        for k in range(0, 500, 25):
            chunk = pairs[k:k + 25]
            worst = max(worst, abs(corpus_bleu(chunk).score - oracles.corpus_bleu(chunk)))
        worst = max(worst, abs(corpus_bleu(pairs).score - oracles.corpus_bleu(pairs)))
        self_bad = sum(sentence_bleu(t, t).score != 1.0 for t in (random_tokens(rng) for _ in range(1000)))
        info["detail"] = f"max |diff|={worst:.2e}, bleu(t,t)!=1 on {self_bad}/1000"
        assert worst <= 1e-9
        assert self_bad == 0


# 4 -----------------------------------------------------------------------------

def test_04_anchor_soundness():
    with criterion(4, "anchor soundness") as info:
        rng = np.random.default_rng(4)
        violations = anchors = 0
        for k in range(1000):
            r, c = rng.integers(1, 15, size=2)
            s = rng.random((r, c)) ** 3
            if k % 2:
                s = np.round(s, 1)  # plant ties
            theta = float(rng.uniform(0.05, 0.6))
            got = find_anchors(BleuMatrix(s), theta)
            anchors += len(got)
            violations += oracles.anchor_violations(s.tolist(), theta, got)
        info["detail"] = f"{violations} violations over {anchors} anchors"
        assert violations == 0 and anchors > 0


# 5 -----------------------------------------------------------------------------

def smoothed(h, r):
    return oracles.bleu(h, r, 4, smooth=True) if r else 0.0


def gaps_between(anchors, n_src, n_tgt):
    out, ps, pt = [], 0, 0
    for i, j in list(anchors) + [(n_src, n_tgt)]:
        if i > ps and j > pt:
            out.append(((ps, i), (pt, j)))
        ps, pt = i + 1, j + 1
    return out


def test_05_gap_dp_optimality():
    with criterion(5, "gap-fill DP optimality") as info:
        rng = random.Random(5)
        spec = TranslatorSpec("identity", "pt", "en")
        words = [f"w{k}" for k in range(60)]
        checked = mismatched = 0
        for _ in range(200):
            n_src, n_tgt = rng.randint(2, 9), rng.randint(2, 9)
            src = [rng.sample(words, rng.randint(2, 7)) for _ in range(n_src)]
            tgt = [rng.sample(words, rng.randint(2, 7)) for _ in range(n_tgt)]
            for i in rng.sample(range(min(n_src, n_tgt)), k=min(n_src, n_tgt) // 3):
                tgt[i] = list(src[i])  # a few planted anchors
            m = compute_bleu_matrix(src, tgt, spec)
            anchors = find_anchors(m, 0.1)
            for (s0, s1), (t0, t1) in gaps_between(anchors, n_src, n_tgt):
                if s1 - s0 > 4 or t1 - t0 > 4:
                    continue
                total, _ = bleu_gap_dp(src, tgt, (s0, s1), (t0, t1), m, 0.05)
                best = oracles.best_gap_score(src[s0:s1], tgt[t0:t1], 0.05, smoothed)
                checked += 1
                mismatched += abs(total - best) > 1e-9
        info["detail"] = f"{mismatched} mismatches on {checked} gaps"
        assert checked >= 200 and mismatched == 0


# 6 -----------------------------------------------------------------------------

def test_06_cosine_properties():
    with criterion(6, "cosine properties") as info:
        rng = random.Random(6)
        vocab = [f"t{k}" for k in range(50)]
        vecs = [{t: rng.uniform(0.01, 10) for t in rng.sample(vocab, rng.randint(1, 12))} for _ in range(1000)]
        worst_self = max(abs(cosine_similarity(v, v) - 1.0) for v in vecs)
        worst_sym = 0.0
        for a, b in zip(vecs, vecs[1:]):
            worst_sym = max(worst_sym, abs(cosine_similarity(a, b) - cosine_similarity(b, a)))
        changed = 0
        for q in range(100):
            query, docs = vecs[q], vecs[100 + 9 * q:100 + 9 * (q + 1)]
            base = max(range(len(docs)), key=lambda k: cosine_similarity(query, docs[k]))
            for k in range(len(docs)):
                alpha = 10 ** rng.uniform(-6, 6)
                scaled = list(docs)
                scaled[k] = {t: alpha * w for t, w in docs[k].items()}
                cos = [cosine_similarity(query, d) for d in scaled]
                changed += max(range(len(cos)), key=cos.__getitem__) != base
                assert abs(cos[k] - cosine_similarity(query, docs[k])) <= 1e-9
        info["detail"] = f"self err={worst_self:.1e}, sym err={worst_sym:.1e}, argmax changes={changed}"
        assert worst_self <= 1e-9 and worst_sym <= 1e-9 and changed == 0


# 7 -----------------------------------------------------------------------------

def zipf_tokens(rng, n_tokens, n_types=30000):
    syllables = [c + v for c in "bcdfglmnprstvz" for v in "aeiou"]
    types = sorted({"".join(rng.choice(syllables) for _ in range(rng.randint(1, 4))) for _ in range(n_types)})
    rng.shuffle(types)
    weights = [1.0 / (r + 1) for r in range(len(types))]
    return rng.choices(types, weights, k=n_tokens)


def test_07_bpe_round_trip_and_determinism(tmp_path):
    with criterion(7, "BPE round trip and determinism") as info:
        rng = random.Random(7)
        failures = 0
        alphabet = "abcdeéç澳門xyz"
        for m in range(20):
            corpus = ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, 8))) for _ in range(300)]
            model = learn_bpe(corpus, corpus[:30], rng.randint(5, 80))
            for _ in range(50):
                seq = ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, 10))) for _ in range(rng.randint(0, 8))]
                failures += undo_bpe(apply_bpe(model, seq)) != seq
            again = learn_bpe(list(corpus), corpus[:30], model.n_merges)
            model.save(tmp_path / f"a{m}")
            again.save(tmp_path / f"b{m}")
            failures += (tmp_path / f"a{m}").read_bytes() != (tmp_path / f"b{m}").read_bytes()
        tokens = zipf_tokens(random.Random(70), 100_000)
        model = learn_bpe(tokens, [], 2000)
        types, units = vocab_report(tokens, model)
        info["detail"] = (f"{failures} failures on 1000 sequences/20 models; "
                          f"100K tokens: {types} types -> {units} units after {model.n_merges} merges")
        assert failures == 0
        assert units < types + model.n_merges


# 8 -----------------------------------------------------------------------------

def test_08_sign_test_exactness():
    with criterion(8, "sign-test exactness") as info:
        worst, cases = 0.0, 0
        for n in range(21):
            for wins in range(n + 1):
                k = min(wins, n - wins)
                closed = 1.0 if 2 * k == n else min(1.0, 2 * sum(math.comb(n, i) for i in range(k + 1)) / 2 ** n)
                got = binomial_two_sided(wins, n - wins)
                worst = max(worst, abs(got - closed), abs(got - oracles.sign_test_p(wins, n - wins)))
                cases += 1
        info["detail"] = f"{cases} cases, max |diff|={worst:.1e}"
        assert worst <= 1e-12


# 9 -----------------------------------------------------------------------------

def test_09_pivot_composition(tmp_path):
    with criterion(9, "pivot composition") as info:
        rng = random.Random(9)
        zh = [chr(0x4E00 + k) for k in range(0, 400, 2)]
        en = [f"e{k}" for k in range(200)]
        (tmp_path / "zh_en.tsv").write_text("".join(f"{a}\t{b}\n" for a, b in zip(zh, en) if rng.random() < 0.9),
                                            encoding="utf-8")
        (tmp_path / "en_pt.tsv").write_text("".join(f"{b}\tp{b}|alt\n" for b in en if rng.random() < 0.9),
                                            encoding="utf-8")
        ab = TranslatorSpec("lexicon", "zh", "en", resource=str(tmp_path / "zh_en.tsv"))
        bc = TranslatorSpec("lexicon", "en", "pt", resource=str(tmp_path / "en_pt.tsv"))
        sents = [rng.choices(zh + ["x", "1"], k=rng.randint(0, 12)) for _ in range(1000)]
        direct = [" ".join(pivot_translate(ab, bc, s)).encode("utf-8") for s in sents]
        manual = [" ".join(translate(bc, translate(ab, s))).encode("utf-8") for s in sents]
        batch = [" ".join(t).encode("utf-8") for t in pivot_translate_batch(ab, bc, sents)]
        stub = tmp_path / "upper.py"
        stub.write_text("import sys\nfor line in sys.stdin:\n    sys.stdout.write(line.upper())\n", encoding="utf-8")
        cmd = TranslatorSpec("external_command", "en", "pt", resource=f"{sys.executable} {stub}")
        via_cmd = pivot_translate_batch(ab, cmd, sents)
        cmd_manual = translate_batch(cmd, translate_batch(ab, sents))
        try:
            pivot_translate(ab, TranslatorSpec("lexicon", "pt", "en", resource=str(tmp_path / "en_pt.tsv")), ["x"])
            mismatch_raised = False
        except PivotMismatch:
            mismatch_raised = True
        differ = sum(a != b for a, b in zip(direct, manual)) + sum(a != b for a, b in zip(batch, manual))
        info["detail"] = f"{differ} differences on 1000 sentences, PivotMismatch raised={mismatch_raised}"
        assert differ == 0 and via_cmd == cmd_manual and mismatch_raised


# 10 ----------------------------------------------------------------------------

def test_10_stats_identity():
    with criterion(10, "stats identity") as info:
        rng = random.Random(10)
        bad = 0
        for _ in range(50):
            pairs = [(random_tokens(rng, 0, 15), random_tokens(rng, 0, 15)) for _ in range(rng.randint(1, 40))]
            s = compute_stats(pairs)
            words = [sum(len(p[k]) for p in pairs) for k in (0, 1)]
            vocab = [len({t for p in pairs for t in p[k]}) for k in (0, 1)]
            bad += any(s.mean_len[k] * s.n_sentences != s.n_words[k] for k in (0, 1))
            bad += (s.n_sentences, list(s.n_words), list(s.vocab)) != (len(pairs), words, vocab)
        info["detail"] = f"{bad} mismatches on 50 corpora"
        assert bad == 0


# 11 ----------------------------------------------------------------------------

def adversarial_segment(rng):
    pieces = ["\t", "\n", "\r", "\r\n", "\\", "\\t", "\\n", "<", ">", "&", "&amp;", '"', "'", "]]>", "<seg>",
              "</tu>", "&#13;", "\x01", "\x0b", "﻿", " ", " ", " ", "  ", "澳門", "ção", "\U0001F600",
              "<?xml", "<!--", "-->", "{", "}", '\\"', "\x7f", "￾"]
    return "".join(rng.choice(pieces) for _ in range(rng.randint(0, 12)))


def test_11_format_round_trips(tmp_path):
    with criterion(11, "format round trips") as info:
        rng = random.Random(11)
        segs = [adversarial_segment(rng) for _ in range(500)]
        pairs = [SentencePair(segs[k], segs[-k - 1], rng.random(), "bleu_merge", f"d{k}-e{k}", (k, k + 1), (k, k + 2))
                 for k in range(500)]
        failed = []
        for fmt in ("tsv", "jsonl", "tmx"):
            path = tmp_path / f"c.{fmt}"
            write_corpus(pairs, fmt, path)
            back = read_corpus(path, fmt)
            want = pairs if fmt != "tsv" else [SentencePair(p.src, p.tgt, p.score, p.method) for p in pairs]
            if back != want:
                failed.append(fmt)
        info["detail"] = f"500 segments, failing formats: {failed or 'none'}"
        assert not failed


# 12 ----------------------------------------------------------------------------

def test_12_golden_run(fixtures, tmp_path):
    with criterion(12, "end-to-end golden run") as info:
        names = ("corpus.tsv", "corpus.jsonl", "corpus.tmx", "report.json")
        golden = {n: (fixtures / "golden" / n).read_bytes() for n in names}
        mismatches = []
        for run in range(2):
            project = tmp_path / f"run{run}"
            shutil.copytree(fixtures, project, ignore=shutil.ignore_patterns("golden"))
            cfg = load_config(project / "pipeline.yaml")
            run_all(cfg)
            run_all(cfg)  # a completed run repeated in place
            mismatches += [f"run{run}/{n}" for n in names if (project / "build" / n).read_bytes() != golden[n]]
        info["detail"] = f"2 fresh runs + reruns, mismatches: {mismatches or 'none'}"
        assert not mismatches
