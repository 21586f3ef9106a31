# %% [markdown]
# # Paragraph and sentence alignment
#
# Inside an aligned document pair, units are paired in order when both sides
# have the same count. Otherwise BLEU anchors are found on a matrix of
# translated-source versus target scores, and the gaps between anchors are
# filled by a BLEU dynamic program with a length-based fallback.

# %%
import numpy as np

from bitextkit.hieralign import (
    BleuMatrix, HierConfig, LengthModel, align_units, compute_bleu_matrix, find_anchors, length_dp,
)
from bitextkit.translator import TranslatorSpec

spec = TranslatorSpec("identity", "pt", "en")
src = [s.split() for s in ["o governo anunciou um plano", "a economia cresce este ano de forma estável",
                           "os visitantes aumentam", "o festival abre em maio"]]
tgt = [s.split() for s in ["o governo anunciou um plano", "a economia cresce este ano", "de forma estável",
                           "os visitantes aumentam", "o festival abre em maio"]]
m = compute_bleu_matrix(src, tgt, spec)
np.round(m.scores, 2)

# %%
find_anchors(m, theta=0.1)

# %% [markdown]
# The second source sentence was split in two on the target side; the gap
# filler recovers it as a 1-2 merge.

# %%
for p in align_units(src, tgt, spec, HierConfig(count_rule_filter=False)):
    print(p.method, p.src_span, p.tgt_span, round(p.score, 3))

# %% [markdown]
# Crossing candidates cannot both be anchors; the longer, then higher-scoring,
# monotone chain wins.

# %%
find_anchors(BleuMatrix(np.array([[0.2, 0.9], [0.8, 0.1]])), 0.1)

# %% [markdown]
# When there is no lexical overlap at all the length model decides. Its cost
# is a Gaussian on `tgt_len - ratio * src_len`, plus a prior per move type.

# %%
length_dp([20, 35, 12], [22, 17, 19, 13], LengthModel(1.0, 6.8), HierConfig().priors)
