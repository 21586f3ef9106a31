# %% [markdown]
# # Translation backends and pivoting
#
# Alignment never trains an MT system. It calls a `TranslatorSpec`, which may
# be a lexicon, a table of cached sentence translations, an external command
# or the identity.

# %%
import sys
import tempfile
from pathlib import Path

from bitextkit.translator import TranslatorSpec, pivot_translate, translate, translate_batch

tmp = Path(tempfile.mkdtemp())
(tmp / "zh_en.tsv").write_text("澳門\tMacao\n經濟\teconomy\n", encoding="utf-8")
(tmp / "en_pt.tsv").write_text("Macao\tMacau\neconomy\teconomia\n", encoding="utf-8")
zh_en = TranslatorSpec("lexicon", "zh", "en", resource=str(tmp / "zh_en.tsv"))
en_pt = TranslatorSpec("lexicon", "en", "pt", resource=str(tmp / "en_pt.tsv"))

translate(zh_en, ["澳", "門", "經", "濟", "好"])

# %% [markdown]
# Per-character Chinese tokens are regrouped into the longest lexicon entries
# they spell, and unknown tokens pass through. Pivoting composes two legs.

# %%
pivot_translate(zh_en, en_pt, ["澳", "門", "經", "濟"])

# %% [markdown]
# Any program reading one sentence per line works as a backend. A cache file
# keeps repeated sentences from reaching it twice.

# %%
script = tmp / "upper.py"
script.write_text("import sys\nfor line in sys.stdin:\n    sys.stdout.write(line.upper())\n")
shout = TranslatorSpec("external_command", "pt", "en", resource=f"{sys.executable} {script}",
                       cache_path=str(tmp / "cache.tsv"))
print(translate_batch(shout, [["olá"], ["bom", "dia"], ["olá"]]))
print((tmp / "cache.tsv").read_text())
