# %% [markdown]
# # Text normalization
#
# Web pages from Macau mix traditional and simplified characters, full-width
# Latin letters and curly quotes. Everything downstream (retrieval, BLEU,
# corpus statistics) works on normalized tokens, so this is the first step.

# %%
from bitextkit.textnorm import Lang, NormConfig, analyze, normalize, split_sentences, stem, tokenize

normalize("澳門經濟增長３％，“旅客”人數上升", Lang.ZH)

# %% [markdown]
# Variant folding only applies to Chinese; Portuguese text keeps its accents
# but is lower-cased.

# %%
print(normalize("“Olá”, disse o Secretário", Lang.PT))
print(normalize("“Olá”", Lang.PT, NormConfig(case_fold=False)))

# %% [markdown]
# Chinese is tokenized one character per token, with runs of Latin letters
# and digits kept whole. Offsets always point back into the input.

# %%
tt = tokenize("GDP增長3%", Lang.ZH)
list(zip(tt.tokens, tt.offsets)), tt.reconstruct()

# %%
split_sentences("他說：「好！」然後走了。今天下雨。", Lang.ZH)

# %%
split_sentences("O Sr. Silva chegou às 3.5 horas. Saiu cedo.", Lang.PT)

# %% [markdown]
# A light suffix stripper is available for retrieval terms.

# %%
[stem(w, Lang.PT) for w in ["governo", "governos", "governamental"]], analyze("Os GOVERNOS", "pt", NormConfig(stemming=True))
