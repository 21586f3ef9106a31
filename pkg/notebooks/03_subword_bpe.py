# %% [markdown]
# # Byte-pair encoding
#
# BPE merges the most frequent adjacent symbol pair again and again. Word ends
# are marked with `</w>` while learning, and segmented output marks every
# non-final unit with `@@` so segmentation can be undone exactly.

# %%
import random
from collections import Counter

from bitextkit.subword import apply_bpe, learn_bpe, undo_bpe, vocab_report

corpus = "o governo anunciou o novo plano os governos anunciaram novos planos".split() * 5
model = learn_bpe(corpus, [], 12)
model.merges

# %%
seg = apply_bpe(model, "os governos anunciaram planos desconhecidos".split())
seg, undo_bpe(seg)

# %% [markdown]
# The point of BPE for MT is a bounded vocabulary. On a Zipfian synthetic
# corpus the number of distinct units after 2,000 merges is far below the
# number of word types.

# %%
rng = random.Random(1)
syllables = [c + v for c in "bcdfglmnprstvz" for v in "aeiou"]
types = list({"".join(rng.choices(syllables, k=rng.randint(1, 4))) for _ in range(20000)})
tokens = rng.choices(types, [1 / (r + 1) for r in range(len(types))], k=100_000)
big = learn_bpe(tokens, [], 2000)
print("types, units:", vocab_report(tokens, big))

# %%
units = Counter(u for t in tokens[:5000] for u in apply_bpe(big, [t]))
units.most_common(10)
