"""Baseline sentence alignment: a logistic aligned/not-aligned scorer over
normalized edit distance, plus monotonic global-alignment DP over the
(m+1) x (n+1) lattice."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import optimize

from .corpus import DraftPair, ParagraphPair, Revision, RevisionOp, Sentence
from .errors import ModelFormatError, TrainingError
from .textmetrics import normalized_levenshtein

DEFAULT_GAP_PENALTY = math.log(0.5)


def pair_distance(s1: Sentence, s2: Sentence, granularity: str = "char") -> float:
    """Normalized edit distance used as the scorer feature; character-level
    on lowercased text by default (robust near-duplicate signal)."""
    if granularity == "char":
        return normalized_levenshtein(s1.text.lower(), s2.text.lower())
    return normalized_levenshtein(s1.tokens, s2.tokens)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class AlignScorer:
    """Logistic model P(aligned) = sigmoid(weight * distance + bias)."""

    weight: float
    bias: float
    granularity: str = "char"

    def score(self, s1: Sentence, s2: Sentence) -> float:
        f = pair_distance(s1, s2, self.granularity)
        return float(_sigmoid(self.weight * f + self.bias))


def logistic_negloglik(theta: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float):
    """Penalized negative log-likelihood and gradient for the 1-feature
    logistic model; the bias is not regularized."""
    w, b = theta
    z = w * x + b
    p = _sigmoid(z)
    eps = 1e-12
    nll = -float(np.sum(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    nll += 0.5 * l2 * w * w
    resid = p - y
    grad = np.array([float(resid @ x) + l2 * w, float(resid.sum())])
    return nll, grad


def train_scorer(
    examples: Iterable[tuple[Sentence, Sentence, bool]],
    l2: float = 1.0,
    tol: float = 1e-6,
    granularity: str = "char",
) -> AlignScorer:
    """Fit the scorer on (sentence, sentence, aligned?) triples."""
    examples = list(examples)
    if not examples:
        raise TrainingError("no scorer training examples")
    y = np.array([1.0 if aligned else 0.0 for _, _, aligned in examples])
    if y.min() == y.max():
        raise TrainingError("degenerate scorer data: all examples in one class")
    x = np.array([pair_distance(s1, s2, granularity) for s1, s2, _ in examples])
    result = optimize.minimize(
        logistic_negloglik,
        np.zeros(2),
        args=(x, y, l2),
        jac=True,
        method="L-BFGS-B",
        options={"gtol": tol, "maxiter": 500},
    )
    if not np.isfinite(result.x).all():
        raise TrainingError(f"scorer optimization failed: {result.message}")
    return AlignScorer(weight=float(result.x[0]), bias=float(result.x[1]),
                       granularity=granularity)


@dataclass(frozen=True)
class Alignment:
    """Monotonic one-to-one sentence alignment of a paragraph pair."""

    pairs: frozenset[tuple[int, int]]
    m: int
    n: int

    def __post_init__(self):
        seen1, seen2 = set(), set()
        for i, j in self.pairs:
            if not (1 <= i <= self.m and 1 <= j <= self.n):
                raise ValueError(f"pair ({i},{j}) out of range for ({self.m},{self.n})")
            if i in seen1 or j in seen2:
                raise ValueError(f"pair ({i},{j}) reuses an index")
            seen1.add(i)
            seen2.add(j)
        ordered = sorted(self.pairs)
        for (i, j), (i2, j2) in zip(ordered, ordered[1:]):
            if j >= j2:
                raise ValueError(f"crossing pairs ({i},{j}) and ({i2},{j2})")

    def unaligned_d1(self) -> frozenset[int]:
        used = {i for i, _ in self.pairs}
        return frozenset(i for i in range(1, self.m + 1) if i not in used)

    def unaligned_d2(self) -> frozenset[int]:
        used = {j for _, j in self.pairs}
        return frozenset(j for j in range(1, self.n + 1) if j not in used)


def global_align(
    pair: ParagraphPair,
    scorer: AlignScorer,
    gap_penalty: float = DEFAULT_GAP_PENALTY,
) -> Alignment:
    """Maximize sum(log score) over aligned pairs plus gap_penalty per
    unaligned sentence, over all monotonic one-to-one alignments.

    DP moves: align(i, j), skip-D1 and skip-D2; on ties, align is preferred
    over skip-D1 over skip-D2, which keeps the result deterministic and
    favors alignment recall.
    """
    m, n = pair.m, pair.n
    logp = np.empty((m + 1, n + 1))
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            logp[i, j] = math.log(
                max(scorer.score(pair.d1_sentences[i - 1], pair.d2_sentences[j - 1]), 1e-300)
            )
    best = np.full((m + 1, n + 1), -math.inf)
    move = np.zeros((m + 1, n + 1), dtype=np.int8)  # 1 align, 2 skip-D1, 3 skip-D2
    best[0, 0] = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            if i == 0 and j == 0:
                continue
            score, mv = -math.inf, 0
            if i > 0 and j > 0:
                score, mv = best[i - 1, j - 1] + logp[i, j], 1
            if i > 0:
                cand = best[i - 1, j] + gap_penalty
                if cand > score:
                    score, mv = cand, 2
            if j > 0:
                cand = best[i, j - 1] + gap_penalty
                if cand > score:
                    score, mv = cand, 3
            best[i, j], move[i, j] = score, mv
    pairs = []
    i, j = m, n
    while i > 0 or j > 0:
        mv = move[i, j]
        if mv == 1:
            pairs.append((i, j))
            i, j = i - 1, j - 1
        elif mv == 2:
            i -= 1
        else:
            j -= 1
    return Alignment(pairs=frozenset(pairs), m=m, n=n)


def alignment_score(
    pair: ParagraphPair,
    alignment: Alignment,
    scorer: AlignScorer,
    gap_penalty: float = DEFAULT_GAP_PENALTY,
) -> float:
    """Objective value of an alignment under the DP scoring."""
    total = 0.0
    for i, j in sorted(alignment.pairs):
        total += math.log(
            max(scorer.score(pair.d1_sentences[i - 1], pair.d2_sentences[j - 1]), 1e-300)
        )
    total += gap_penalty * (len(alignment.unaligned_d1()) + len(alignment.unaligned_d2()))
    return total


def alignment_from_revisions(revisions: Iterable[Revision], m: int, n: int) -> Alignment:
    pairs = frozenset(
        (r.d1_index, r.d2_index)
        for r in revisions
        if r.op in (RevisionOp.MODIFY, RevisionOp.NOCHANGE)
    )
    return Alignment(pairs=pairs, m=m, n=n)


def make_training_pairs(
    drafts: Iterable[DraftPair],
    annotations: dict[str, list[Revision]],
    rng: np.random.Generator,
    negative_ratio: float = 1.0,
) -> list[tuple[Sentence, Sentence, bool]]:
    """Aligned pairs from Modify/Nochange gold revisions as positives;
    negatives sampled from non-aligned cross pairs at the given ratio."""
    out: list[tuple[Sentence, Sentence, bool]] = []
    negatives: list[tuple[Sentence, Sentence]] = []
    for d in drafts:
        for p in d.paragraph_pairs:
            revs = annotations.get(p.pair_id, [])
            gold = {
                (r.d1_index, r.d2_index)
                for r in revs
                if r.op in (RevisionOp.MODIFY, RevisionOp.NOCHANGE)
            }
            for i, j in sorted(gold):
                out.append((p.d1_sentences[i - 1], p.d2_sentences[j - 1], True))
            for i in range(1, p.m + 1):
                for j in range(1, p.n + 1):
                    if (i, j) not in gold:
                        negatives.append((p.d1_sentences[i - 1], p.d2_sentences[j - 1]))
    n_pos = sum(1 for _, _, a in out if a)
    n_neg = min(len(negatives), int(round(n_pos * negative_ratio)))
    if negatives and n_neg:
        idx = rng.choice(len(negatives), size=n_neg, replace=False)
        for k in sorted(idx):
            s1, s2 = negatives[k]
            out.append((s1, s2, False))
    return out


# ---------------------------------------------------------------------------
# Scorer serialization
# ---------------------------------------------------------------------------

_MAGIC = "revid-align-scorer\tv1"


def save_scorer(scorer: AlignScorer, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"weight={scorer.weight!r}\n")
        fh.write(f"bias={scorer.bias!r}\n")
        fh.write(f"feature=nlev_{scorer.granularity}_lower\n")


def load_scorer(path) -> AlignScorer:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ModelFormatError(f"{path}: not a revid-align-scorer v1 file")
    fields = dict(line.split("=", 1) for line in lines[1:] if line)
    try:
        granularity = fields.get("feature", "nlev_char_lower").split("_")[1]
        return AlignScorer(
            weight=float(fields["weight"]), bias=float(fields["bias"]),
            granularity=granularity,
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: malformed scorer file ({exc})")
