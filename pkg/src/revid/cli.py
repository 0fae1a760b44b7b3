"""Command-line interface: train, predict, evaluate, cross-validate,
mutate-trace and gen-synth subcommands.

stdout carries data, stderr carries logs.  Exit codes: 0 ok, 1 usage,
2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import corpus, evaluate, mutate, pipeline, synth
from .errors import (
    AnnotationError,
    CorpusFormatError,
    ModelFormatError,
    RevidError,
    TrainingError,
    TransformError,
)
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--scheme", type=int, default=3, choices=(3, 4, 6),
                   help="revision-class granularity")
    p.add_argument("--seed-mode", default="n-candidate",
                   choices=("one-best", "n-candidate"))
    p.add_argument("--n", type=int, default=10, dest="n_candidates",
                   help="sampled seed candidates per paragraph")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--gap-penalty", type=float, default=math.log(0.5))
    p.add_argument("--normalization", default="normalized",
                   choices=("normalized", "raw"))
    p.add_argument("--no-unigram", action="store_true")
    p.add_argument("--no-location", action="store_true")
    p.add_argument("--no-textual", action="store_true")
    p.add_argument("--no-language", action="store_true")
    p.add_argument("--edit-granularity", default="token", choices=("token", "char"))
    p.add_argument("--lstm-hidden", type=int, default=100)
    p.add_argument("--lstm-iterations", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)


def _config_from_args(args) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        scheme=args.scheme,
        seed_mode=args.seed_mode,
        n_candidates=args.n_candidates,
        seed=args.seed,
        l2=args.l2,
        gap_penalty=args.gap_penalty,
        normalization=args.normalization,
        unigram=not args.no_unigram,
        location=not args.no_location,
        textual=not args.no_textual,
        language=not args.no_language,
        edit_granularity=args.edit_granularity,
        lstm_hidden=args.lstm_hidden,
        lstm_iterations=args.lstm_iterations,
        jobs=args.jobs,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="revid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model bundle")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="bundle output directory")
    _add_config_flags(p)

    p = sub.add_parser("predict", help="predict revisions for a corpus")
    p.add_argument("--bundle", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", default="joint-ncand", choices=pipeline.MODES)
    p.add_argument("--out", required=True, help="output annotations file")
    p.add_argument("--trace", help="also write the mutation trace here")

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--scheme", type=int, default=3, choices=(3, 4, 6))

    p = sub.add_parser("cross-validate", help="by-student k-fold comparison")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", help="write the TSV report here (default stdout)")
    _add_config_flags(p)

    p = sub.add_parser("mutate-trace", help="dump the labeled-candidate trace")
    p.add_argument("--bundle", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", default="joint-1best",
                   choices=("joint-1best", "joint-ncand"))
    p.add_argument("--pair-id", help="restrict to one paragraph pair")

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-annotations", required=True)
    p.add_argument("--essays", type=int, default=60)
    p.add_argument("--paragraphs-per-essay", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--type-dist",
                   help="comma list Type=prob, defaults to the published shape")
    p.add_argument("--keep-fraction", type=float, default=0.35,
                   help="tokens kept by content rewrites (lower = noisier alignment)")
    return parser


def _load_inputs(corpus_path, annotations_path=None):
    drafts = corpus.load_corpus(corpus_path)
    if annotations_path is None:
        return drafts, None
    return drafts, corpus.load_annotations(annotations_path, drafts)


def cmd_train(args) -> int:
    config = _config_from_args(args)
    drafts, annotations = _load_inputs(args.corpus, args.annotations)
    bundle = pipeline.train_bundle(drafts, annotations, config)
    pipeline.save_bundle(bundle, args.out)
    print(f"bundle written to {args.out} (config {config.config_hash()})",
          file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    bundle = pipeline.load_bundle(args.bundle)
    drafts = corpus.load_corpus(args.corpus)
    predictions = pipeline.predict_corpus(bundle, drafts, args.mode)
    corpus.save_annotations(
        {pid: p.revisions for pid, p in predictions.items()}, args.out
    )
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for pid, p in predictions.items():
                if p.result is not None:
                    fh.write(f"#pair\t{pid}\n")
                    fh.write(mutate.format_trace(p.result.trace) + "\n")
    print(f"predictions written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    drafts, gold = _load_inputs(args.corpus, args.gold)
    pred = corpus.load_annotations(args.pred, drafts)
    scheme = corpus.ClassScheme.from_int(args.scheme)
    extraction, classification = evaluate.evaluate_predictions(
        drafts, gold, pred, scheme
    )
    print(f"alignment_accuracy\t{extraction.accuracy:.6f}")
    print(f"macro_precision\t{classification.macro_precision():.6f}")
    print(f"macro_recall\t{classification.macro_recall():.6f}")
    for cls in scheme.classes:
        c = classification.per_class.get(cls)
        if c is None:
            continue
        print(f"class\t{cls}\t{c.precision:.6f}\t{c.recall:.6f}"
              f"\t{c.correct}\t{c.predicted}\t{c.gold}")
    return EXIT_OK


def cmd_cross_validate(args) -> int:
    config = _config_from_args(args)
    drafts, annotations = _load_inputs(args.corpus, args.annotations)
    report = evaluate.cross_validate(drafts, annotations, config, k=args.folds)
    tsv = report.to_tsv()
    if args.out:
        Path(args.out).write_text(tsv, encoding="utf-8")
    else:
        sys.stdout.write(tsv)
    sys.stderr.write(report.to_text())
    return EXIT_OK


def cmd_mutate_trace(args) -> int:
    bundle = pipeline.load_bundle(args.bundle)
    drafts = corpus.load_corpus(args.corpus)
    for d in drafts:
        for p in d.paragraph_pairs:
            if args.pair_id and p.pair_id != args.pair_id:
                continue
            prediction = pipeline.predict_paragraph(bundle, p, args.mode)
            print(f"#pair\t{p.pair_id}")
            print(mutate.format_trace(prediction.result.trace))
    return EXIT_OK


def cmd_gen_synth(args) -> int:
    type_dist = None
    if args.type_dist:
        type_dist = {}
        for part in args.type_dist.split(","):
            name, _, value = part.partition("=")
            type_dist[name.strip()] = float(value)
    cfg = synth.SynthConfig(
        essays=args.essays,
        paragraphs_per_essay=args.paragraphs_per_essay,
        seed=args.seed,
        keep_fraction=args.keep_fraction,
        type_dist=type_dist,
    )
    drafts, annotations = synth.generate(cfg)
    corpus.save_corpus(drafts, args.out_corpus)
    corpus.save_annotations(annotations, args.out_annotations)
    n_revs = sum(len(v) for v in annotations.values())
    print(f"{len(drafts)} essays, {n_revs} revisions written", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "cross-validate": cmd_cross_validate,
    "mutate-trace": cmd_mutate_trace,
    "gen-synth": cmd_gen_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"revid: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_DATA
    except (CorpusFormatError, AnnotationError, ModelFormatError, TransformError) as exc:
        print(f"revid: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, FloatingPointError) as exc:
        print(f"revid: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RevidError, ValueError) as exc:
        print(f"revid: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
