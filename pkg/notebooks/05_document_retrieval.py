# %% [markdown]
# # Document alignment by cross-lingual retrieval
#
# Each Chinese article becomes a pseudo-query: its highest TF-IDF terms,
# glossed into Portuguese. Portuguese articles are ranked by cosine against
# that query, optionally mixed with a word-embedding similarity, and pairs are
# picked greedily one-to-one.

# %%
import datetime as dt

from bitextkit.docalign import (
    DocAlignConfig, EmbeddingTable, align_documents, build_tfidf_index, cosine_similarity, make_pseudo_query,
)
from bitextkit.document import Document
from bitextkit.translator import Lexicon

lex = Lexicon({"经济": ("economia",), "旅客": ("visitantes",), "疫苗": ("vacina",), "学校": ("escolas",),
               "艺术节": ("festival",), "增长": ("cresce",)})
day = dt.date(2024, 3, 5)
zh = [Document.create(f"http://n.mo/zh/{k}", "zh", "", [t], date=day) for k, t in enumerate(
    ["澳門經濟增長，旅客增長。", "疫苗接種站開放，疫苗充足。", "藝術節五月開幕。"])]
pt = [Document.create(f"http://n.mo/pt/{k}", "pt", "", [t], date=day) for k, t in enumerate(
    ["O festival de artes abre em maio.", "A economia cresce e os visitantes aumentam.",
     "Os postos de vacina abrem; há vacina suficiente.", "As escolas abrem em setembro."])]

make_pseudo_query(zh[0], lex, top_k=5)

# %%
index = build_tfidf_index(pt)
{d: round(index.idf_of(t), 3) for d, t in [("festival", "festival"), ("abr", "abr")]}

# %%
cosine_similarity({"a": 1.0, "b": 1.0}, {"a": 1.0})

# %%
for p in align_documents(zh, pt, lex, cfg=DocAlignConfig(top_k=10)):
    src = next(d for d in zh if d.id == p.src_doc_id)
    tgt = next(d for d in pt if d.id == p.tgt_doc_id)
    print(f"{p.score:.3f}  {src.paragraphs[0]}  <->  {tgt.paragraphs[0]}")

# %% [markdown]
# With an embedding table the score becomes `lam * cosine + (1 - lam) * embedding`.

# %%
emb = EmbeddingTable({"economia": [1, 0], "cresce": [0.9, 0.1], "visitantes": [0.7, 0.3],
                      "vacina": [0, 1], "festival": [0.5, -0.5]})
[(round(p.score, 3), p.method) for p in align_documents(zh, pt, lex, emb, DocAlignConfig(lam=0.5, top_k=10))]
