# %% [markdown]
# # The whole pipeline
#
# `bitextkit run -c pipeline.yaml` chains crawl, extract, document alignment,
# paragraph alignment, sentence alignment and export. Here it runs on a copy
# of the fixture project.

# %%
import shutil
import tempfile
from pathlib import Path

from bitextkit.cli import main

root = Path(__file__).resolve().parent.parent if "__file__" in globals() else Path.cwd().parent
project = Path(tempfile.mkdtemp()) / "project"
shutil.copytree(root / "tests" / "fixtures", project, ignore=shutil.ignore_patterns("golden"))
print((project / "pipeline.yaml").read_text())

# %%
main(["run", "-c", str(project / "pipeline.yaml")])

# %%
print((project / "build" / "corpus.tsv").read_text(encoding="utf-8"))

# %% [markdown]
# Every stage is idempotent. Running again leaves all artifacts byte-identical
# and the output matches the golden files kept with the tests.

# %%
golden = root / "tests" / "fixtures" / "golden"
main(["run", "-c", str(project / "pipeline.yaml")])
print("golden match:", all((project / "build" / n).read_bytes() == (golden / n).read_bytes()
    for n in ("corpus.tsv", "corpus.jsonl", "corpus.tmx", "report.json")))
