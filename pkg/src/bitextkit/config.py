"""Pipeline configuration: one YAML file, validated in full before any stage runs.

Schema (``config_version: 1``); relative paths resolve against the config file::

    config_version: 1
    workdir: build                 # stage artifacts and the report go here
    languages: {src: zh, tgt: pt}
    sites: [sites/news.yaml]       # SiteRules files
    normalization: {width_fold: true, unicode_form: true, zh_variant_fold: true,
                    punct_normalize: true, case_fold: true, stemming: false}
    translator:
      bootstrap: {kind: lexicon, resource: lexicon.tsv}
      improved: null               # optional; used for paragraph/sentence alignment
    docalign: {lam: 0.5, threshold: 0.0, top_n: 50, top_k: 30,
               date_window_days: 2, embeddings: null, url_rule: true}
    hieralign: {theta: 0.1, theta_gap: 0.05, max_gap: 8, count_rule_filter: true}
    export: {formats: [tsv, jsonl, tmx], dedup: false}
    workers: null                  # null means os.cpu_count()
    seed: 0
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .corpusio import FORMATS
from .docalign import DocAlignConfig
from .errors import ConfigInvalid
from .hieralign import HierConfig
from .textnorm import Lang, NormConfig
from .translator import KINDS, TranslatorSpec

CONFIG_VERSION = 1
TOP_KEYS = {"config_version", "workdir", "languages", "sites", "normalization", "translator",
            "docalign", "hieralign", "export", "workers", "seed"}
DOCALIGN_KEYS = {"lam", "threshold", "top_n", "top_k", "date_window_days", "embeddings", "url_rule", "stem_terms"}
HIER_KEYS = {"theta", "theta_gap", "max_gap", "count_rule_filter", "filter_min_bleu", "min_anchors"}
TRANSLATOR_KEYS = {"kind", "resource", "cache_path", "fallback_lexicon", "timeout"}


@dataclass(frozen=True)
class PipelineConfig:
    workdir: Path
    src: Lang = Lang.ZH
    tgt: Lang = Lang.PT
    sites: tuple = ()
    norm: NormConfig = NormConfig()
    bootstrap: TranslatorSpec | None = None
    improved: TranslatorSpec | None = None
    docalign: DocAlignConfig = DocAlignConfig()
    embeddings: Path | None = None
    url_rule: bool = True
    hieralign: HierConfig = HierConfig()
    formats: tuple = ("tsv", "jsonl", "tmx")
    dedup: bool = False
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    seed: int = 0

    @property
    def align_spec(self) -> TranslatorSpec:
        return self.improved or self.bootstrap


class _Problems(dict):
    def check(self, ok: bool, key: str, message: str) -> bool:
        if not ok:
            self.setdefault(key, message)
        return ok


def _number(p: _Problems, sect: dict, name: str, key: str, lo, hi, default, integer=False,
            lo_open=False, nullable=False):
    value = sect.get(key, default)
    where = f"{name}.{key}"
    if value is None and nullable:
        return None
    kinds = (int,) if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kinds):
        p.check(False, where, f"must be {'an integer' if integer else 'a number'}, got {value!r}")
        return default
    below = value <= lo if lo_open else value < lo
    if lo is not None and below or hi is not None and value > hi:
        lo_s = "(" if lo_open else "["
        p.check(False, where, f"{value!r} is outside {lo_s}{lo}, {'inf' if hi is None else hi}]")
        return default
    return value


def _flag(p: _Problems, sect: dict, name: str, key: str, default: bool) -> bool:
    value = sect.get(key, default)
    if not isinstance(value, bool):
        p.check(False, f"{name}.{key}", f"must be true or false, got {value!r}")
        return default
    return value


def _section(p: _Problems, raw: dict, name: str, allowed: set) -> dict:
    sect = raw.get(name) or {}
    if not isinstance(sect, dict):
        p.check(False, name, "must be a mapping")
        return {}
    for key in sorted(set(sect) - allowed):
        p.check(False, f"{name}.{key}", "unknown key")
    return sect


def _path(p: _Problems, base: Path, value, where: str, must_exist=True) -> Path | None:
    if value is None:
        return None
    if not isinstance(value, str):
        p.check(False, where, "must be a path string")
        return None
    path = (base / value) if not os.path.isabs(value) else Path(value)
    if must_exist:
        p.check(path.exists(), where, f"{path} does not exist")
    return path


def _translator(p: _Problems, base: Path, raw, where: str, src, tgt) -> TranslatorSpec | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        p.check(False, where, "must be a mapping")
        return None
    for key in sorted(set(raw) - TRANSLATOR_KEYS):
        p.check(False, f"{where}.{key}", "unknown key")
    kind = raw.get("kind")
    if not p.check(kind in KINDS, f"{where}.kind", f"must be one of {', '.join(KINDS)}"):
        return None
    d = dict(raw)
    if kind in ("lexicon", "cached_table"):
        res = _path(p, base, raw.get("resource"), f"{where}.resource")
        p.check(res is not None, f"{where}.resource", "required for this backend")
        d["resource"] = str(res) if res else None
    if raw.get("fallback_lexicon"):
        d["fallback_lexicon"] = str(_path(p, base, raw["fallback_lexicon"], f"{where}.fallback_lexicon"))
    if raw.get("cache_path"):
        d["cache_path"] = str(_path(p, base, raw["cache_path"], f"{where}.cache_path", must_exist=False))
    if "timeout" in raw:
        d["timeout"] = _number(p, raw, where, "timeout", 0, None, 600.0, lo_open=True)
    try:
        return TranslatorSpec(src=src, tgt=tgt, **d)
    except (TypeError, ValueError) as exc:
        p.check(False, where, str(exc))
        return None


def validate(raw, base_dir=".") -> PipelineConfig:
    """Check every field and build a :class:`PipelineConfig`, or raise ConfigInvalid listing all problems."""
    base = Path(base_dir)
    p = _Problems()
    if not isinstance(raw, dict):
        raise ConfigInvalid({"<root>": "config must be a mapping"})
    for key in sorted(set(raw) - TOP_KEYS):
        p.check(False, key, "unknown key")
    p.check(raw.get("config_version") == CONFIG_VERSION, "config_version",
            f"must be {CONFIG_VERSION}, got {raw.get('config_version')!r}")

    workdir = _path(p, base, raw.get("workdir", "build"), "workdir", must_exist=False)

    langs = _section(p, raw, "languages", {"src", "tgt"})
    src = tgt = None
    for side in ("src", "tgt"):
        try:
            lang = Lang.parse(langs.get(side, "zh" if side == "src" else "pt"))
        except ValueError as exc:
            p.check(False, f"languages.{side}", str(exc))
            lang = None
        src, tgt = (lang, tgt) if side == "src" else (src, lang)
    if src and tgt:
        p.check(src != tgt, "languages", "src and tgt must differ")

    sites = raw.get("sites") or []
    if not isinstance(sites, list):
        p.check(False, "sites", "must be a list of paths")
        sites = []
    site_paths = tuple(_path(p, base, s, f"sites[{k}]") for k, s in enumerate(sites))

    norm_raw = _section(p, raw, "normalization", set(NormConfig.__dataclass_fields__))
    norm = NormConfig(**{k: _flag(p, norm_raw, "normalization", k, getattr(NormConfig(), k)) for k in norm_raw
                         if k in NormConfig.__dataclass_fields__})

    tr = _section(p, raw, "translator", {"bootstrap", "improved"})
    bootstrap = improved = None
    if src and tgt:
        p.check("bootstrap" in tr, "translator.bootstrap", "required")
        bootstrap = _translator(p, base, tr.get("bootstrap"), "translator.bootstrap", src, tgt)
        improved = _translator(p, base, tr.get("improved"), "translator.improved", src, tgt)

    da = _section(p, raw, "docalign", DOCALIGN_KEYS)
    doc_cfg = DocAlignConfig(
        lam=_number(p, da, "docalign", "lam", 0.0, 1.0, 0.5),
        threshold=_number(p, da, "docalign", "threshold", -1.0, 1.0, 0.0),
        top_n=_number(p, da, "docalign", "top_n", 1, None, 50, integer=True),
        top_k=_number(p, da, "docalign", "top_k", 1, None, 30, integer=True),
        date_window_days=_number(p, da, "docalign", "date_window_days", 0, None, 2, integer=True, nullable=True),
        stem_terms=_flag(p, da, "docalign", "stem_terms", True),
        norm=norm,
    )
    embeddings = _path(p, base, da.get("embeddings"), "docalign.embeddings")
    url_rule = _flag(p, da, "docalign", "url_rule", True)

    ha = _section(p, raw, "hieralign", HIER_KEYS)
    theta = _number(p, ha, "hieralign", "theta", 0.0, 1.0, 0.1, lo_open=True)
    if not p.check(theta < 1.0, "hieralign.theta", "must be below 1"):
        theta = 0.1
    hier = HierConfig(
        theta=theta,
        theta_gap=_number(p, ha, "hieralign", "theta_gap", 0.0, 1.0, 0.05),
        max_gap=_number(p, ha, "hieralign", "max_gap", 1, 64, 8, integer=True),
        count_rule_filter=_flag(p, ha, "hieralign", "count_rule_filter", True),
        filter_min_bleu=_number(p, ha, "hieralign", "filter_min_bleu", 0.0, 1.0, 0.01),
        min_anchors=_number(p, ha, "hieralign", "min_anchors", 1, None, 3, integer=True),
        norm=norm,
    )

    ex = _section(p, raw, "export", {"formats", "dedup"})
    formats = ex.get("formats", ["tsv", "jsonl", "tmx"])
    if not isinstance(formats, list) or not formats or any(f not in FORMATS for f in formats):
        p.check(False, "export.formats", f"must be a non-empty list drawn from {', '.join(FORMATS)}")
        formats = ["tsv"]
    dedup = _flag(p, ex, "export", "dedup", False)

    workers = raw.get("workers")
    if workers is None:
        workers = os.cpu_count() or 1
    else:
        workers = _number(p, raw, "", "workers", 1, 1024, 1, integer=True)
    seed = _number(p, raw, "", "seed", 0, 2**64 - 1, 0, integer=True)

    problems = {k.lstrip("."): v for k, v in p.items()}
    if problems:
        raise ConfigInvalid(problems)
    return PipelineConfig(workdir=workdir, src=src, tgt=tgt, sites=site_paths, norm=norm,
                          bootstrap=bootstrap, improved=improved, docalign=doc_cfg,
                          embeddings=embeddings, url_rule=url_rule, hieralign=hier,
                          formats=tuple(formats), dedup=dedup, workers=workers, seed=seed)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigInvalid({"<file>": f"{path} does not exist"}) from None
    except yaml.YAMLError as exc:
        raise ConfigInvalid({"<file>": f"not valid YAML: {exc}"}) from None
    return validate(raw, path.parent)
