"""forge: command-line front end for the toolkit.

One subcommand per top-level operation: clean, sample, pseudo-label,
perturb, export, evaluate, run, stats. Settings resolve in the order
CLI flag > FORGE_BACKEND_URL (backend only) > config file > defaults.
Exit codes: 0 success, 1 validation error, 2 IO/transport error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from dialogforge import __version__
from dialogforge.backend import make_backend
from dialogforge.cleanse import (
    CleanConfig,
    anonymize,
    balanced_sample,
    filter_low_entity,
    filter_media,
    filter_short,
)
from dialogforge.corpus import (
    Vocabulary,
    corpus_stats,
    load_corpus,
    save_corpus,
    validate_corpus,
)
from dialogforge.errors import BackendError, ForgeError, ValidationError
from dialogforge.knowledge import load_kb
from dialogforge.metrics import evaluate_task
from dialogforge.perturb import PerturbConfig, Strategy, perturb_corpus
from dialogforge.pipeline import PipelineConfig, run_pipeline
from dialogforge.pseudo import PseudoConfig, load_rules, pseudo_label
from dialogforge.serde import SampleFormat, Task, export_training_set, load_samples


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    raw = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(raw, dict):
        raise ValidationError("config file must contain a JSON object")
    return raw


def _vocab(args) -> Vocabulary:
    return Vocabulary.from_file(args.vocab) if getattr(args, "vocab", None) else Vocabulary.default()


def _add_vocab_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vocab", help="vocabulary JSON file (defaults to the shipped one)")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_stats(args) -> int:
    corpus = load_corpus(args.corpus, _vocab(args))
    for warning in validate_corpus(corpus):
        print(f"warning: {warning}", file=sys.stderr)
    report = corpus_stats(corpus)
    if args.json:
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
        return 0
    rows = [
        ("#Dialogue", f"{report.n_dialogues}"),
        ("#Utterance", f"{report.n_utterances}"),
        ("#Utterance/dialogue", f"{report.utterances_per_dialogue:.2f}"),
        ("#Char./dialogue", f"{report.chars_per_dialogue:.2f}"),
        ("#Char./utterance", f"{report.chars_per_utterance:.2f}"),
        ("#Label/dialogue", f"{report.labels_per_dialogue:.2f}"),
        ("#Label/utterance", f"{report.labels_per_utterance:.2f}"),
    ]
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        print(f"{key:<{width}}  {value:>10}")
    if report.label_distribution:
        print("\nutterances per label:")
        for name, count in report.label_distribution.items():
            print(f"  {name:<16} {count}")
    if report.slot_distribution:
        print("\ndistinct entities per slot:")
        for name, count in report.slot_distribution.items():
            print(f"  {name:<16} {count}")
    return 0


def cmd_clean(args) -> int:
    raw = _load_config(args.config).get("clean", {})
    clean_cfg = CleanConfig.from_dict(raw)
    clean_cfg = CleanConfig(
        args.min_utterances if args.min_utterances is not None else clean_cfg.min_utterances,
        tuple(args.media_marker) if args.media_marker else clean_cfg.media_markers,
        args.min_kb_entities if args.min_kb_entities is not None else clean_cfg.min_kb_entities,
        clean_cfg.anonymize_rules,
    )
    clean_cfg.validate()
    corpus = load_corpus(args.corpus, _vocab(args))
    n0 = len(corpus)
    corpus = filter_short(corpus, clean_cfg.min_utterances)
    corpus = filter_media(corpus, clean_cfg.media_markers)
    if args.kb:
        corpus = filter_low_entity(corpus, load_kb(args.kb), clean_cfg.min_kb_entities)
    corpus = anonymize(corpus, clean_cfg.anonymize_rules)
    save_corpus(corpus, args.out)
    print(f"kept {len(corpus)}/{n0} dialogues -> {args.out}")
    return 0


def cmd_sample(args) -> int:
    corpus = load_corpus(args.corpus, _vocab(args))
    sampled = balanced_sample(corpus, args.fraction, args.seed)
    save_corpus(sampled, args.out)
    print(f"sampled {len(sampled)}/{len(corpus)} dialogues -> {args.out}")
    return 0


def cmd_pseudo_label(args) -> int:
    vocab = _vocab(args)
    pool = load_corpus(args.pool, vocab)
    unlabeled = load_corpus(args.unlabeled, vocab)
    rules = load_rules(args.rules, vocab)
    cfg = PseudoConfig(
        delta=args.delta,
        limit=args.limit,
        match_same_speaker=not args.cross_speaker,
    )
    labeled = pseudo_label(unlabeled, pool, rules, cfg)
    save_corpus(labeled, args.out)
    print(f"pseudo-labeled {len(labeled)} dialogues -> {args.out}")
    return 0


def cmd_perturb(args) -> int:
    corpus = load_corpus(args.corpus, _vocab(args))
    try:
        strategies = frozenset(Strategy(s) for s in args.strategies.split(","))
    except ValueError as exc:
        raise ValidationError(f"unknown strategy: {exc}") from None
    cfg = PerturbConfig(
        strategies=strategies,
        alias_lexicon_path=args.lexicon,
        translator=args.translator,
        rm_ops_per_dialogue=args.rm_ops,
        seed=args.seed,
    )
    perturbed = perturb_corpus(corpus, cfg, workers=args.workers)
    if args.mode == "append":
        from dataclasses import replace

        copies = [replace(d, id=f"{d.id}-perturbed") for d in perturbed.dialogues]
        out = corpus.replace_dialogues(list(corpus.dialogues) + copies)
    else:
        out = perturbed
    save_corpus(out, args.out)
    print(f"perturbed {len(perturbed)} dialogues ({args.mode}) -> {args.out}")
    return 0


def cmd_export(args) -> int:
    corpus = load_corpus(args.corpus, _vocab(args))
    kb = load_kb(args.kb)
    n = export_training_set(
        corpus,
        kb,
        Task(args.task.upper()),
        SampleFormat(args.format.capitalize()),
        args.out,
        k=args.k_triples,
        max_chars=args.max_chars,
    )
    print(f"wrote {n} {args.task} samples -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    gold = load_samples(args.gold)
    predictions = Path(args.pred).read_text("utf-8").splitlines()
    report = evaluate_task(gold, predictions, Task(args.task.upper()), _vocab(args))
    print(report.render_table())
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, indent=2), "utf-8"
        )
        print(f"report -> {args.report}")
    return 0


def cmd_run(args) -> int:
    file_cfg = {k: v for k, v in _load_config(args.config).items() if k != "clean"}
    cfg = PipelineConfig.from_dict(file_cfg)
    backend_url = os.environ.get("FORGE_BACKEND_URL", cfg.backend_url)
    if args.backend:
        backend_url = args.backend
    cfg.backend_url = backend_url
    if args.kb:
        cfg.kb_path = args.kb
    if args.oracle_nlu:
        cfg.oracle_nlu = True
    if args.oracle_dpl:
        cfg.oracle_dpl = True
    for key in ("k_triples", "max_new_tokens", "request_timeout", "max_in_flight",
                "batch_size", "max_retries", "seed", "max_chars"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    if not cfg.kb_path:
        raise ValidationError("a knowledge base is required (--kb or config kb_path)")

    corpus = load_corpus(args.corpus, _vocab(args))
    kb = load_kb(cfg.kb_path)
    backend = make_backend(cfg.backend_url, cfg.request_timeout, cfg.max_retries)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_pipeline(corpus, kb, cfg, backend, out_dir / "transcript.jsonl")
    for task, report in result.reports.items():
        print(report.render_table())
        print()
        path = out_dir / f"report_{task.value.lower()}.json"
        path.write_text(json.dumps(report.to_dict(), ensure_ascii=False, indent=2), "utf-8")
    print(f"transcript and reports -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Build, clean, augment, serialize and evaluate medical dialogue corpora.",
    )
    parser.add_argument("--version", action="version", version=f"forge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("clean", help="filter, anonymize")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="pipeline config JSON (clean.* keys)")
    p.add_argument("--kb", help="knowledge base for the entity filter")
    p.add_argument("--min-utterances", type=int, default=None)
    p.add_argument("--min-kb-entities", type=int, default=None)
    p.add_argument("--media-marker", action="append", default=None,
                   help="repeatable; replaces the configured marker list")
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("sample", help="disease-balanced sampling")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("pseudo-label", help="similarity-transfer labeling with rule fallback")
    p.add_argument("--pool", required=True, help="human-labeled corpus")
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--rules", required=True)
    p.add_argument("--delta", type=float, default=0.8)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--cross-speaker", action="store_true",
                   help="match against both speakers' pool utterances")
    p.add_argument("--out", required=True)
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_pseudo_label)

    p = sub.add_parser("perturb", help="natural perturbation")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--strategies", default="alias",
                   help="comma list of alias,back-translation,random-modification")
    p.add_argument("--lexicon", help="alias lexicon TSV")
    p.add_argument("--translator", default="identity",
                   help="identity | fixture:<path> | http(s)://...")
    p.add_argument("--rm-ops", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mode", choices=("append", "replace"), default="append")
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("export", help="write task samples")
    p.add_argument("corpus")
    p.add_argument("--kb", required=True)
    p.add_argument("--task", choices=("nlu", "dpl", "nlg"), required=True)
    p.add_argument("--format", choices=("causal", "conditional"), default="conditional")
    p.add_argument("--out", required=True)
    p.add_argument("--k-triples", type=int, default=5)
    p.add_argument("--max-chars", type=int, default=None)
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("evaluate", help="score predictions against gold samples")
    p.add_argument("--task", choices=("nlu", "dpl", "nlg"), required=True)
    p.add_argument("--gold", required=True, help="gold TaskSample JSONL")
    p.add_argument("--pred", required=True, help="one prediction per line")
    p.add_argument("--report", help="write the JSON report here")
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="run the three-stage pipeline against a backend")
    p.add_argument("corpus")
    p.add_argument("--kb")
    p.add_argument("--backend", help="echo | gold:<jsonl>[,...] | http(s)://...")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--oracle-nlu", action="store_true")
    p.add_argument("--oracle-dpl", action="store_true")
    p.add_argument("--k-triples", type=int, default=None)
    p.add_argument("--max-new-tokens", type=int, default=None)
    p.add_argument("--request-timeout", type=float, default=None)
    p.add_argument("--max-in-flight", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--max-retries", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-chars", type=int, default=None)
    _add_vocab_flag(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
