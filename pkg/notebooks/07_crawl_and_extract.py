# %% [markdown]
# # Crawling and article extraction
#
# The test fixtures include a small snapshot of a bilingual news site. The
# `mirror` rule replays it offline, so this script runs without a network.

# %%
from pathlib import Path

from bitextkit.docalign import align_by_url
from bitextkit.ingest import SiteRules, crawl, extract_document

root = Path(__file__).resolve().parent.parent if "__file__" in globals() else Path.cwd().parent
rules = SiteRules.load(root / "tests" / "fixtures" / "news.yaml")
pages = crawl(rules)
[(p.status, p.url) for p in pages]

# %%
docs = [extract_document(p, rules) for p in pages if p.status == 200 and rules.is_article(p.url)]
d = docs[0]
d.lang, d.title, d.date, d.author, d.paragraphs, d.switch_url

# %% [markdown]
# Boilerplate (scripts, share buttons, related links) is gone. Language
# switch links give the first, cheapest document pairs.

# %%
for pair in align_by_url(docs):
    print(pair)
