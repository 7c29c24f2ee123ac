"""Command-line entry point: ``headparse train|parse|eval|stats``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

import numpy as np

from .config import TrainConfig
from .corpus import ConllError, TreebankValidationError, format_stats, load_treebank, projective_stats, write_conll
from .decoders import MODES
from .evaluation import PUNCT_TAGS, attachment_scores, format_tree_rates, tree_rate_report, uas_by_length, write_report
from .head_selector import dump_distributions
from .model import ModelFormatError, load_model, parse_sentences, predictions_to_treebank, save_model
from .trainer import TrainingError, train_model

log = logging.getLogger("headparse")


class CommandError(Exception):
    """Raised for user-facing failures; reported on stderr with exit code 1."""


def _load(path: str):
    try:
        return load_treebank(path)
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (ConllError, TreebankValidationError) as exc:
        raise CommandError(f"{path}: {exc}") from exc


def _overrides(args: argparse.Namespace) -> dict:
    mapping = {"dim": "hidden_dim", "word_dim": "word_dim", "tag_dim": "tag_dim", "layers": "layers",
               "seed": "seed", "epochs": "max_epochs", "batch": "batch_size", "dropout": "dropout",
               "lr": "lr", "pretrained": "pretrained", "mode": "mode", "min_count": "min_count",
               "patience": "patience", "label_epochs": "label_epochs"}
    out = {field: getattr(args, flag) for flag, field in mapping.items() if getattr(args, flag) is not None}
    if args.no_patience:
        out["patience"] = None
    if args.lowercase:
        out["lowercase"] = True
    return out


def cmd_train(args: argparse.Namespace) -> int:
    try:
        config = TrainConfig(**_overrides(args))
    except ValueError as exc:
        raise CommandError(f"bad configuration: {exc}") from exc
    train = _load(args.train)
    dev = _load(args.dev) if args.dev else None
    if args.labeled:
        for k, sent in enumerate(train):
            if not sent.is_labeled:
                raise CommandError(f"--labeled given but training sentence {k} has no DEPREL labels")
    log.info("training on %d sentences (dev %d)", len(train), len(dev) if dev else 0)
    try:
        bundle, head_log, label_log = train_model(train, dev, config, labeled=args.labeled)
    except (TrainingError, ValueError) as exc:
        raise CommandError(str(exc)) from exc
    try:
        save_model(bundle, args.out)
        if args.log:
            with open(args.log, "w", encoding="utf-8") as fh:
                head_log.write(fh)
    except OSError as exc:
        raise CommandError(f"cannot write output: {exc}") from exc
    log.info("best dev UAS %.2f at epoch %d", head_log.best_score, head_log.best_epoch)
    if label_log is not None:
        log.info("best labeler dev score %.2f at epoch %d", label_log.best_score, label_log.best_epoch)
    return 0


def cmd_parse(args: argparse.Namespace) -> int:
    try:
        bundle = load_model(args.model)
    except OSError as exc:
        raise CommandError(f"cannot read {args.model}: {exc.strerror or exc}") from exc
    except ModelFormatError as exc:
        raise CommandError(f"{args.model}: {exc}") from exc
    if args.dim is not None and args.dim != bundle.config.hidden_dim:
        raise CommandError(f"--dim {args.dim} does not match the model's hidden size {bundle.config.hidden_dim}")
    treebank = _load(args.input)
    mode = args.mode or bundle.config.mode
    preds = parse_sentences(bundle, treebank, mode=mode, repair=not args.no_repair, threads=args.threads)
    out = predictions_to_treebank(treebank, preds)

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            write_conll(out, fh)
    else:
        write_conll(out, sys.stdout)
    if args.dump_distributions:
        with open(args.dump_distributions, "w", encoding="utf-8") as fh:
            for k, pred in enumerate(preds):
                dump_distributions(np.exp(pred.log_probs), fh, k)
    report = tree_rate_report([p.greedy for p in preds], [p.heads for p in preds])
    print(format_tree_rates(report), file=sys.stderr)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gold = _load(args.gold)
    pred = _load(args.pred)
    punct = PUNCT_TAGS if args.punct_set is None else frozenset(args.punct_set.split(","))
    if args.punct_set == "":
        punct = frozenset()
    try:
        report = attachment_scores(gold, pred, punct_tags=punct)
        if args.bins:
            report.bins = uas_by_length(gold, pred, bins=args.bins, punct_tags=punct)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    write_report(report, sys.stdout, machine=args.machine)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    treebank = _load(args.input)
    try:
        stats = projective_stats(treebank)
    except TreebankValidationError as exc:
        raise CommandError(f"{args.input}: {exc}") from exc
    print("sentences\t%projective")
    print(format_stats(stats))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="headparse", description="BiLSTM head-selection dependency parser.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--train", required=True, help="CoNLL-X training file")
    p.add_argument("--dev", help="CoNLL-X development file for model selection")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--log", help="write the per-epoch training log here")
    p.add_argument("--dim", type=int, help="LSTM hidden size d")
    p.add_argument("--word-dim", type=int, help="word embedding size s")
    p.add_argument("--tag-dim", type=int, help="tag embedding size q")
    p.add_argument("--layers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--pretrained", help="word vectors, one 'word v1 ... vs' line each")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--min-count", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--no-patience", action="store_true", help="always run --epochs epochs")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--labeled", action="store_true", help="also train the arc labeler")
    p.add_argument("--label-epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse a CoNLL-X file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="write CoNLL-X here instead of stdout")
    p.add_argument("--mode", choices=MODES, help="repair decoder (default: the model's)")
    p.add_argument("--no-repair", action="store_true", help="emit greedy heads as they are")
    p.add_argument("--dump-distributions", metavar="FILE", help="write head distributions as TSV")
    p.add_argument("--threads", type=int, help="parallel workers (env HEADPARSE_THREADS)")
    p.add_argument("--dim", type=int, help="expected hidden size; checked against the model")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--punct-set", help="comma-separated gold tags to exclude ('' keeps everything)")
    p.add_argument("--bins", type=int, help="also report UAS over N equal-count length bins")
    p.add_argument("--machine", action="store_true", help="key=value output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="projectivity statistics of a treebank")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"headparse {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
