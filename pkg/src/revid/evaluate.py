"""Metrics and the experiment harness: alignment accuracy, per-class and
macro precision/recall, and by-student k-fold cross-validation comparing the
pipeline baseline against the joint 1-best and +N-candidate approaches."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from . import pipeline as pl
from .align import Alignment, alignment_from_revisions
from .corpus import ClassScheme, DraftPair, Revision, apply_scheme
from .errors import RevidError

APPROACHES = ("Baseline", "1Best", "+NCandidate")
_MODE_OF = {
    "Baseline": "pipeline",
    "1Best": "joint-1best",
    "+NCandidate": "joint-ncand",
}


@dataclass(frozen=True)
class ExtractionScore:
    """Alignment agreement: 2*agreed / (#D1 sentences + #D2 sentences).

    The numerator credits 2 per agreed aligned pair and 1 per sentence whose
    unaligned status agrees, so identical alignments score exactly 1.0.
    """

    numerator: int
    d1_total: int
    d2_total: int

    @property
    def agreed_alignments(self) -> float:
        return self.numerator / 2.0

    @property
    def accuracy(self) -> float:
        denom = self.d1_total + self.d2_total
        return self.numerator / denom if denom else 1.0

    def __add__(self, other: "ExtractionScore") -> "ExtractionScore":
        return ExtractionScore(
            numerator=self.numerator + other.numerator,
            d1_total=self.d1_total + other.d1_total,
            d2_total=self.d2_total + other.d2_total,
        )


def alignment_accuracy(gold: Alignment, pred: Alignment) -> ExtractionScore:
    if (gold.m, gold.n) != (pred.m, pred.n):
        raise RevidError(
            f"alignment sizes differ: ({gold.m},{gold.n}) vs ({pred.m},{pred.n})"
        )
    numerator = (
        2 * len(gold.pairs & pred.pairs)
        + len(gold.unaligned_d1() & pred.unaligned_d1())
        + len(gold.unaligned_d2() & pred.unaligned_d2())
    )
    return ExtractionScore(numerator=numerator, d1_total=gold.m, d2_total=gold.n)


@dataclass
class ClassCounts:
    correct: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0


@dataclass
class ClassificationScore:
    """Per-class and unweighted-macro precision/recall.

    A predicted revision is correct iff the identical (d1_index, d2_index,
    op, scheme-mapped type) tuple exists in gold.  Classes absent from both
    gold and predictions are left out of the macro average (a perfect
    prediction always scores 1.0); one-sided empties contribute 0.
    """

    scheme: ClassScheme
    per_class: dict[str, ClassCounts] = field(default_factory=dict)

    def _counts(self, cls: str) -> ClassCounts:
        return self.per_class.setdefault(cls, ClassCounts())

    def add_paragraph(self, gold: Sequence[Revision], pred: Sequence[Revision]) -> None:
        gold = apply_scheme(gold, self.scheme)
        pred = apply_scheme(pred, self.scheme)
        gold_set = {(r.d1_index, r.d2_index, r.op, r.rev_type) for r in gold}
        for r in gold:
            self._counts(str(r.rev_type)).gold += 1
        for r in pred:
            c = self._counts(str(r.rev_type))
            c.predicted += 1
            if (r.d1_index, r.d2_index, r.op, r.rev_type) in gold_set:
                c.correct += 1

    def _macro_classes(self, include_nochange: bool = True) -> list[str]:
        out = []
        for cls in self.scheme.classes:
            if cls == "Nochange" and not include_nochange:
                continue
            c = self.per_class.get(cls)
            if c is not None and (c.gold or c.predicted):
                out.append(cls)
        return out

    def macro_precision(self, include_nochange: bool = True) -> float:
        classes = self._macro_classes(include_nochange)
        if not classes:
            return 1.0
        return sum(self.per_class[c].precision for c in classes) / len(classes)

    def macro_recall(self, include_nochange: bool = True) -> float:
        classes = self._macro_classes(include_nochange)
        if not classes:
            return 1.0
        return sum(self.per_class[c].recall for c in classes) / len(classes)


def classification_scores(
    gold: Sequence[Revision], pred: Sequence[Revision], scheme: ClassScheme
) -> ClassificationScore:
    score = ClassificationScore(scheme=scheme)
    score.add_paragraph(gold, pred)
    return score


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass
class FoldScores:
    fold: int
    alignment: dict[str, float]
    macro_precision: dict[str, float]
    macro_recall: dict[str, float]
    mean_generations: dict[str, float]


@dataclass
class ExperimentReport:
    config: pl.RunConfig
    folds: list[FoldScores]
    approaches: tuple[str, ...] = APPROACHES

    def mean(self, metric: str, approach: str) -> float:
        values = [getattr(f, metric)[approach] for f in self.folds]
        return float(np.mean(values))

    def paired_p(self, metric: str, a: str, b: str) -> float:
        xs = np.array([getattr(f, metric)[a] for f in self.folds])
        ys = np.array([getattr(f, metric)[b] for f in self.folds])
        if len(xs) < 2 or np.allclose(xs, ys):
            return float("nan")
        return float(stats.ttest_rel(xs, ys).pvalue)

    _METRICS = (
        ("alignment", "alignment_accuracy"),
        ("macro_precision", "macro_precision"),
        ("macro_recall", "macro_recall"),
        ("mean_generations", "mean_generations"),
    )

    def to_tsv(self) -> str:
        lines = [
            f"# revid cross-validation\tscheme={self.config.scheme}"
            f"\tfolds={len(self.folds)}\tseed={self.config.seed}"
            f"\tconfig_hash={self.config.config_hash()}",
            "approach\tfold\talignment_accuracy\tmacro_precision\tmacro_recall\tmean_generations",
        ]
        for approach in self.approaches:
            for f in self.folds:
                lines.append(
                    f"{approach}\t{f.fold}\t{f.alignment[approach]:.6f}"
                    f"\t{f.macro_precision[approach]:.6f}"
                    f"\t{f.macro_recall[approach]:.6f}"
                    f"\t{f.mean_generations[approach]:.6f}"
                )
            lines.append(
                f"{approach}\tmean\t{self.mean('alignment', approach):.6f}"
                f"\t{self.mean('macro_precision', approach):.6f}"
                f"\t{self.mean('macro_recall', approach):.6f}"
                f"\t{self.mean('mean_generations', approach):.6f}"
            )
        for metric, name in self._METRICS[:3]:
            for a, b in (("1Best", "Baseline"), ("+NCandidate", "Baseline"),
                         ("+NCandidate", "1Best")):
                lines.append(f"ttest\t{name}\t{a}\t{b}\t{self.paired_p(metric, a, b):.6f}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        rows = [("approach", "align_acc", "macro_P", "macro_R", "mean_gens")]
        for approach in self.approaches:
            rows.append(
                (
                    approach,
                    f"{self.mean('alignment', approach):.4f}",
                    f"{self.mean('macro_precision', approach):.4f}",
                    f"{self.mean('macro_recall', approach):.4f}",
                    f"{self.mean('mean_generations', approach):.2f}",
                )
            )
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        out = [
            f"{len(self.folds)}-fold by-student cross-validation, "
            f"{self.config.scheme}-class scheme (seed {self.config.seed})"
        ]
        for r in rows:
            out.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
        out.append(
            "paired t-test p (vs Baseline): "
            + ", ".join(
                f"{a}={self.paired_p('alignment', a, 'Baseline'):.4f}"
                for a in ("1Best", "+NCandidate")
            )
            + " on alignment accuracy"
        )
        return "\n".join(out) + "\n"


def student_folds(
    drafts: Sequence[DraftPair], k: int, seed: int
) -> list[list[str]]:
    """Partition student ids into k disjoint folds via a seeded shuffle;
    k shrinks to the student count when there are fewer students."""
    students = sorted({d.student_id for d in drafts})
    if len(students) < 2:
        raise RevidError("cross-validation needs at least 2 distinct students")
    k = min(k, len(students))
    order = list(np.random.default_rng(seed).permutation(students))
    return [order[i::k] for i in range(k)]


def evaluate_predictions(
    drafts: Sequence[DraftPair],
    gold_annotations: dict[str, list[Revision]],
    predictions: dict[str, Sequence[Revision]],
    scheme: ClassScheme,
) -> tuple[ExtractionScore, ClassificationScore]:
    """Corpus-level extraction and classification scores (micro-aggregated
    alignment numerators, class counts pooled before averaging)."""
    extraction = ExtractionScore(0, 0, 0)
    classification = ClassificationScore(scheme=scheme)
    for d in drafts:
        for p in d.paragraph_pairs:
            gold = gold_annotations.get(p.pair_id, [])
            pred = list(predictions.get(p.pair_id, []))
            extraction = extraction + alignment_accuracy(
                alignment_from_revisions(gold, p.m, p.n),
                alignment_from_revisions(pred, p.m, p.n),
            )
            classification.add_paragraph(gold, pred)
    return extraction, classification


def cross_validate(
    drafts: Sequence[DraftPair],
    annotations: dict[str, list[Revision]],
    config: pl.RunConfig,
    k: int = 10,
) -> ExperimentReport:
    """Train on k-1 student folds, evaluate all three approaches on the held
    fold; the same folds, features and models serve every approach."""
    scheme = config.class_scheme
    folds = student_folds(drafts, k, config.seed)
    report = ExperimentReport(config=config, folds=[])
    for fold_no, held in enumerate(folds, start=1):
        held_set = set(held)
        train_drafts = [d for d in drafts if d.student_id not in held_set]
        test_drafts = [d for d in drafts if d.student_id in held_set]
        if not train_drafts or not test_drafts:
            continue
        fold_cfg = config if config.seed_mode == "n-candidate" else _with_ncand(config)
        bundle = pl.train_bundle(train_drafts, annotations, fold_cfg)
        scores = FoldScores(
            fold=fold_no, alignment={}, macro_precision={}, macro_recall={},
            mean_generations={},
        )
        for approach in APPROACHES:
            preds = pl.predict_corpus(bundle, test_drafts, _MODE_OF[approach])
            extraction, classification = evaluate_predictions(
                test_drafts, annotations,
                {pid: p.revisions for pid, p in preds.items()}, scheme,
            )
            gens = [p.generations for p in preds.values()]
            scores.alignment[approach] = extraction.accuracy
            scores.macro_precision[approach] = classification.macro_precision()
            scores.macro_recall[approach] = classification.macro_recall()
            scores.mean_generations[approach] = float(np.mean(gens)) if gens else 0.0
        report.folds.append(scores)
    return report


def _with_ncand(config: pl.RunConfig) -> pl.RunConfig:
    # the harness always compares all three approaches, so the bundle needs
    # an LSTM even when the run config asked for one-best seeding
    return replace(config, seed_mode="n-candidate")
