# %% [markdown]
# # Corpus files, statistics and QA samples

# %%
import tempfile
from pathlib import Path

from bitextkit.corpusio import (
    SentencePair, compute_stats, read_corpus, sample_for_qa, write_corpus, write_review_sheet,
)
from bitextkit.textnorm import analyze

pairs = [
    SentencePair("澳門經濟今年穩定增長。", "A economia de Macau cresce de forma estável este ano.", 1.0, "count_rule"),
    SentencePair("政府發布新的統計數據。", "O Governo publicou novos dados estatísticos.", 0.8, "bleu_anchor"),
    SentencePair("含\t製表符 & <標記>", "com\ttabulação & <marca>", 0.4, "length_fill"),
]
tmp = Path(tempfile.mkdtemp())
for fmt in ("tsv", "jsonl", "tmx"):
    write_corpus(pairs, fmt, tmp / f"c.{fmt}")
    assert read_corpus(tmp / f"c.{fmt}", fmt) == pairs
print((tmp / "c.tsv").read_text(encoding="utf-8"))

# %%
print((tmp / "c.tmx").read_text(encoding="utf-8")[:600])

# %% [markdown]
# Statistics follow the usual corpus table: sentences, words, vocabulary and
# mean length per side. Mean length is kept as an exact fraction.

# %%
stats = compute_stats([(analyze(p.src, "zh"), analyze(p.tgt, "pt")) for p in pairs])
stats, stats.to_dict()

# %% [markdown]
# Manual quality checks start from a seeded sample written as a review sheet.

# %%
write_review_sheet(sample_for_qa(pairs, 2, seed=1), tmp / "review.tsv")
print((tmp / "review.tsv").read_text(encoding="utf-8"))
