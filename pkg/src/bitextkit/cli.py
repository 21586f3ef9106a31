"""Command-line entry point: pipeline stages plus small standalone tools.

Errors are reported as one JSON object on stderr with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .config import load_config
from .corpusio import FORMATS, compute_stats, read_corpus, sample_for_qa, write_review_sheet
from .errors import BitextError, LengthMismatch
from .metrics import BleuConfig, corpus_bleu, sentence_bleu, sign_test
from .pipeline import REPORT, STAGES, run_all, run_stage, summary
from .subword import BpeModel, apply_bpe, learn_bpe, undo_bpe
from .textnorm import analyze
from .translator import TranslatorSpec, pivot_translate_batch

EXIT_ERROR = 1


def _lines(path) -> list[str]:
    if path in (None, "-"):
        return sys.stdin.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


def _emit_lines(lines, path) -> None:
    text = "".join(line + "\n" for line in lines)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _print_json(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, sort_keys=True))


# --- pipeline commands ------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.stage:
        report = run_stage(args.stage, cfg)
    else:
        report = run_all(cfg)
    if args.report:
        Path(args.report).write_text(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    print(summary(report))
    if not args.stage:
        print(f"report: {cfg.workdir / REPORT}")
    return 0


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    _print_json({"ok": True, "workdir": str(cfg.workdir), "sites": len(cfg.sites)})
    return 0


# --- tools ------------------------------------------------------------------

def cmd_bleu(args) -> int:
    hyps = [line.split() for line in _lines(args.hyp)]
    refs = [line.split() for line in _lines(args.ref)]
    if len(hyps) != len(refs):
        raise LengthMismatch(f"{len(hyps)} hypotheses vs {len(refs)} references")
    cfg = BleuConfig(max_n=args.max_n, case_insensitive=not args.case_sensitive, smoothing=args.smoothing)
    if args.sentence:
        for h, r in zip(hyps, refs):
            _print_json(sentence_bleu(h, r, cfg).to_dict())
    else:
        _print_json(corpus_bleu(zip(hyps, refs), cfg).to_dict())
    return 0


def _scores(path) -> list[float]:
    out = []
    for k, line in enumerate(_lines(path), 1):
        if line.strip():
            try:
                out.append(float(line))
            except ValueError:
                raise BitextError(f"{path}:{k}: not a number: {line!r}") from None
    return out


def cmd_signtest(args) -> int:
    a, b = _scores(args.a), _scores(args.b)
    p = sign_test(a, b)
    wins = sum(x > y for x, y in zip(a, b))
    losses = sum(x < y for x, y in zip(a, b))
    _print_json({"wins": wins, "losses": losses, "ties": len(a) - wins - losses, "p": p})
    return 0


def _tokens(paths) -> list[str]:
    return [t for path in paths for line in _lines(path) for t in line.split()]


def cmd_bpe_learn(args) -> int:
    model = learn_bpe(_tokens(args.corpus), _tokens(args.joint or []), args.merges, args.marker)
    model.save(args.output)
    _print_json({"merges": model.n_merges, "output": args.output})
    return 0


def cmd_bpe_apply(args) -> int:
    model = BpeModel.load(args.model)
    out = []
    for line in _lines(args.input):
        toks = line.split()
        out.append(" ".join(undo_bpe(toks, model.marker) if args.undo else apply_bpe(model, toks)))
    _emit_lines(out, args.output)
    return 0


def cmd_stats(args) -> int:
    pairs = read_corpus(args.corpus, args.format, args.src, args.tgt)
    toks = [(analyze(p.src, args.src), analyze(p.tgt, args.tgt)) for p in pairs]
    _print_json(compute_stats(toks).to_dict())
    return 0


def cmd_sample(args) -> int:
    pairs = read_corpus(args.corpus, args.format, args.src, args.tgt)
    picked = sample_for_qa(pairs, args.n, args.seed)
    write_review_sheet(picked, args.output)
    _print_json({"sampled": len(picked), "seed": args.seed, "output": args.output})
    return 0


def _spec(path) -> TranslatorSpec:
    with open(path, encoding="utf-8") as f:
        d = yaml.safe_load(f)
    base = Path(path).parent
    for key in ("resource", "fallback_lexicon", "cache_path"):
        if d.get(key) and d.get("kind") != "external_command" and not Path(d[key]).is_absolute():
            d[key] = str(base / d[key])
    return TranslatorSpec.from_dict(d)


def cmd_pivot(args) -> int:
    first, second = _spec(args.first), _spec(args.second)
    sents = [line.split() for line in _lines(args.input)]
    _emit_lines((" ".join(t) for t in pivot_translate_batch(first, second, sents)), args.output)
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bitextkit", description="Parallel corpus construction toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the whole pipeline or one stage")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--stage", choices=STAGES)
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check-config", help="validate a pipeline config")
    p.add_argument("-c", "--config", required=True)
    p.set_defaults(func=cmd_check)

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("-c", "--config", required=True)
        p.add_argument("--report")
        p.set_defaults(func=cmd_run, stage=stage)

    p = sub.add_parser("bleu", help="BLEU of a tokenized hypothesis file against a reference file")
    p.add_argument("hyp")
    p.add_argument("ref")
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--case-sensitive", action="store_true")
    p.add_argument("--smoothing", choices=("none", "add-one-on-zero"), default="none")
    p.add_argument("--sentence", action="store_true", help="one JSON line per sentence")
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("signtest", help="exact sign test on two per-sentence score files")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_signtest)

    p = sub.add_parser("bpe-learn", help="learn BPE merges")
    p.add_argument("corpus", nargs="+")
    p.add_argument("--joint", nargs="*", help="second-language files learned jointly")
    p.add_argument("-n", "--merges", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--marker", default="@@")
    p.set_defaults(func=cmd_bpe_learn)

    p = sub.add_parser("bpe-apply", help="segment (or with --undo, restore) a tokenized file")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--undo", action="store_true")
    p.set_defaults(func=cmd_bpe_apply)

    for name, func in (("stats", cmd_stats), ("sample", cmd_sample)):
        p = sub.add_parser(name, help="corpus statistics" if name == "stats" else "sample pairs for review")
        p.add_argument("corpus")
        p.add_argument("-f", "--format", choices=FORMATS, default="tsv")
        p.add_argument("--src", default="zh")
        p.add_argument("--tgt", default="pt")
        if name == "sample":
            p.add_argument("-n", type=int, required=True)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("-o", "--output", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("pivot-translate", help="translate through a pivot language")
    p.add_argument("--first", required=True, help="YAML translator spec for the first leg")
    p.add_argument("--second", required=True, help="YAML translator spec for the second leg")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_pivot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BitextError as exc:
        err = exc.to_dict()
    except (OSError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(err, ensure_ascii=False, sort_keys=True) + "\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
