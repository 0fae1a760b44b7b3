"""Collision detection, the three mutation operators, and the generation
loop that jointly settles alignment and revision types.

A candidate's op at a step may disagree with the CRF-predicted op at that
step (a collision); each collision proposes a mutation moving the candidate
toward the prediction, and the lowest-marginal step proposes its applicable
rewrites.  Generation 1 always expands; later candidates expand only when
they out-score their parent.  The final pick minimizes collisions, then
maximizes sequence likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Revision
from .crf import DUMMY_LABELS, CrfModel, LabeledSequence, label, label_op, label_type
from .editseq import (
    DUMMY_TYPE,
    EditOp,
    EditSequence,
    canonical_key,
    canonical_ops,
    decode,
)
from .errors import RevidError
from .features import ParagraphFeatures
from .seedgen import SeedSet


@dataclass(frozen=True)
class Collision:
    """Op disagreement between a candidate step and its predicted label;
    step_index is 1-based."""

    step_index: int
    candidate_op: EditOp
    predicted_op: EditOp

    def __post_init__(self):
        if self.candidate_op is self.predicted_op:
            raise ValueError("a collision requires differing ops")


@dataclass
class LabeledCandidate:
    candidate: EditSequence
    labeling: LabeledSequence
    collisions: list[Collision]
    generation: int
    provenance: str = ""
    expanded: bool = False
    parent_loglik: Optional[float] = None


@dataclass
class SearchResult:
    best: LabeledCandidate
    trace: list[LabeledCandidate]
    revisions: list[Revision]
    generations_run: int


def detect_collisions(
    candidate: EditSequence, labeling: LabeledSequence
) -> list[Collision]:
    """One collision per step whose predicted op-part differs from the
    candidate's op."""
    if len(labeling.labels) != len(candidate.steps):
        raise RevidError(
            f"labeling length {len(labeling.labels)} != candidate length "
            f"{len(candidate.steps)}"
        )
    out = []
    for idx, (step, lab) in enumerate(zip(candidate.steps, labeling.labels), start=1):
        pred = label_op(lab)
        if pred is not step.op:
            out.append(Collision(step_index=idx, candidate_op=step.op, predicted_op=pred))
    return out


def mutate_step(
    candidate: EditSequence, step_index: int, target_op: EditOp
) -> Optional[EditSequence]:
    """Rewrite the candidate so the step at 0-based step_index carries
    target_op; returns None when the rewrite is inapplicable.

    Three operator families:
      split   M-M -> M-K / K-M: the alignment becomes one Delete + one Add.
      merge   M-K / K-M -> M-M: align the unaligned sentence; uses the next
              step (opposite unaligned op merges; M-M re-anchors and pushes
              its displaced sentence out as unaligned).
      flip    M-K <-> K-M: Delete becomes Add or vice versa; requires a
              following M-M whose alignment is broken, its displaced side
              re-added unaligned.  (With an opposite unaligned neighbor the
              flip would only reorder the gap, leaving the alignment as is,
              so it is inapplicable.)

    All inserted steps carry the dummy Nochange type; the result always
    satisfies cursor closure for the same (m, n).
    """
    ops = list(candidate.ops)
    if not 0 <= step_index < len(ops):
        raise RevidError(f"step index {step_index} out of range")
    cur = ops[step_index]
    if cur is target_op:
        raise RevidError("target op equals the current op")
    nxt = ops[step_index + 1] if step_index + 1 < len(ops) else None

    if cur is EditOp.MM:
        # split; the target op leads so the mutated step carries it
        other = EditOp.KM if target_op is EditOp.MK else EditOp.MK
        new_ops = ops[:step_index] + [target_op, other] + ops[step_index + 1 :]
    elif target_op is EditOp.MM:
        # merge an unaligned sentence into an alignment
        opposite = EditOp.KM if cur is EditOp.MK else EditOp.MK
        if nxt is opposite:
            new_ops = ops[:step_index] + [EditOp.MM] + ops[step_index + 2 :]
        elif nxt is EditOp.MM:
            new_ops = ops[:step_index] + [EditOp.MM, cur] + ops[step_index + 2 :]
        else:
            return None
    else:
        # flip delete <-> add
        if nxt is EditOp.MM:
            # breaking the next alignment: its sentence on the flip's new side
            # feeds the flip, the displaced side returns as two unaligned steps
            new_ops = ops[:step_index] + [target_op, cur, cur] + ops[step_index + 2 :]
        else:
            return None
    return EditSequence.from_ops(new_ops, candidate.m, candidate.n)


def propose_mutations(lc: LabeledCandidate) -> list[EditSequence]:
    """Mutations from every collision (toward the predicted op) plus all
    applicable rewrites of the minimum-marginal-likelihood step."""
    proposals: list[EditSequence] = []
    seen: set[tuple[EditOp, ...]] = set()

    def add(seq: Optional[EditSequence]):
        if seq is not None and seq.ops not in seen:
            seen.add(seq.ops)
            proposals.append(seq)

    for col in lc.collisions:
        add(mutate_step(lc.candidate, col.step_index - 1, col.predicted_op))
    if len(lc.candidate.steps) > 0:
        weakest = int(lc.labeling.step_likelihoods.argmin())
        cur = lc.candidate.steps[weakest].op
        for target in EditOp:
            if target is not cur:
                add(mutate_step(lc.candidate, weakest, target))
    return proposals


def _label_candidate(
    candidate: EditSequence,
    model: CrfModel,
    features: ParagraphFeatures,
    generation: int,
    provenance: str,
    parent_loglik: Optional[float],
) -> LabeledCandidate:
    labeling = label(model, candidate, features)
    return LabeledCandidate(
        candidate=candidate,
        labeling=labeling,
        collisions=detect_collisions(candidate, labeling),
        generation=generation,
        provenance=provenance,
        parent_loglik=parent_loglik,
    )


def _finalize(
    winner: LabeledCandidate, model: CrfModel, features: ParagraphFeatures
) -> list[Revision]:
    """Decode the winning labeling into revisions.

    The predicted (Op1, Op2) sequence is used when it satisfies cursor
    closure (always true at zero collisions); otherwise the candidate's
    skeleton carries the predicted types.  A Nochange type cannot sit on an
    Add/Delete step, so when the labeling leaves no valid reading the winner
    is relabeled once with Nochange-typed labels masked down to aligned
    positions.
    """
    cand = winner.candidate

    def closure_ok(ops: Sequence[EditOp]) -> bool:
        mm = sum(1 for o in ops if o is EditOp.MM)
        mk = sum(1 for o in ops if o is EditOp.MK)
        km = sum(1 for o in ops if o is EditOp.KM)
        return mm + mk == cand.m and mm + km == cand.n

    def typed_sequence(labels: Sequence[str]) -> Optional[EditSequence]:
        ops = [label_op(lab) for lab in labels]
        types = [label_type(lab) for lab in labels]
        if closure_ok(ops) and not any(
            o is not EditOp.MM and t == DUMMY_TYPE for o, t in zip(ops, types)
        ):
            return EditSequence.from_ops(ops, cand.m, cand.n, types=types)
        if not any(
            s.op is not EditOp.MM and t == DUMMY_TYPE
            for s, t in zip(cand.steps, types)
        ):
            return EditSequence.from_ops(cand.ops, cand.m, cand.n, types=types)
        return None

    out = typed_sequence(winner.labeling.labels)
    if out is None:
        # permit a Nochange type only as M-M-Nochange on an aligned step
        mask = np.ones((len(cand.steps), len(model.labels)), dtype=bool)
        for k, lab in enumerate(model.labels):
            if label_type(lab) != DUMMY_TYPE:
                continue
            for t, step in enumerate(cand.steps):
                if lab in DUMMY_LABELS or step.op is not EditOp.MM:
                    mask[t, k] = False
        relabeled = label(model, cand, features, mask=mask)
        out = typed_sequence(relabeled.labels)
    return decode(out)


def search(
    seeds: SeedSet,
    model: CrfModel,
    features: ParagraphFeatures,
    normalization: str = "normalized",
) -> SearchResult:
    """Generational mutation search over candidate EditSequences.

    Visited alignments (canonical op-skeletons) are memoized and never
    relabeled, so the search terminates within C(m+n, n) labelings.
    Mutation proposals are labeled in canonical gap order (seeds are labeled
    as given, so sampled seeds still expose both gap orders).
    """
    if not seeds.candidates:
        raise RevidError("search needs at least one seed")
    visited: set[str] = set()
    trace: list[LabeledCandidate] = []
    frontier: list[LabeledCandidate] = []
    for seq, tag in seeds.candidates:
        key = canonical_key(seq)
        if key in visited:
            continue
        visited.add(key)
        lc = _label_candidate(seq, model, features, 1, tag, None)
        trace.append(lc)
        frontier.append(lc)

    generation = 1
    while frontier:
        next_frontier: list[LabeledCandidate] = []
        for lc in frontier:
            own = lc.labeling.comparable_loglik(normalization)
            if (
                lc.generation > 1
                and lc.parent_loglik is not None
                and own <= lc.parent_loglik
            ):
                continue  # no better than its parent: not mutated further
            lc.expanded = True
            for proposal in propose_mutations(lc):
                key = canonical_key(proposal)
                if key in visited:
                    continue
                visited.add(key)
                canon = EditSequence.from_ops(
                    canonical_ops(proposal.ops), proposal.m, proposal.n
                )
                child = _label_candidate(
                    canon, model, features, lc.generation + 1, "Mutated", own
                )
                trace.append(child)
                next_frontier.append(child)
        frontier = next_frontier
        if frontier:
            generation += 1

    best = min(
        trace,
        key=lambda lc: (
            len(lc.collisions),
            -lc.labeling.comparable_loglik(normalization),
            canonical_key(lc.candidate),
        ),
    )
    return SearchResult(
        best=best,
        trace=trace,
        revisions=_finalize(best, model, features),
        generations_run=generation,
    )


def format_trace(trace: list[LabeledCandidate]) -> str:
    """One line per labeled candidate: generation, op-skeleton, collision
    count, raw and normalized loglik, expanded flag.  Bit-exact contract."""
    lines = []
    for lc in trace:
        lines.append(
            "\t".join(
                [
                    str(lc.generation),
                    lc.candidate.skeleton(),
                    str(len(lc.collisions)),
                    f"{lc.labeling.seq_loglik:.6f}",
                    f"{lc.labeling.normalized_loglik:.6f}",
                    "1" if lc.expanded else "0",
                ]
            )
        )
    return "\n".join(lines)
