"""EditSequence: the joint representation of sentence alignment and revision
types, with lossless transformation to and from revision lists.

Two cursors walk the drafts from position (1, 1).  Each step pairs a cursor
action for every draft — Move (M) or Keep (K), at least one cursor moving —
with a revision type, giving three ops: M-M (aligned sentences), K-M (added
D2 sentence) and M-K (deleted D1 sentence).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .corpus import ParagraphPair, Revision, RevisionOp
from .errors import TransformError

DUMMY_TYPE = "Nochange"


class EditOp(str, enum.Enum):
    MM = "M-M"
    KM = "K-M"
    MK = "M-K"

    def __str__(self):
        return self.value

    @property
    def moves_d1(self) -> bool:
        return self in (EditOp.MM, EditOp.MK)

    @property
    def moves_d2(self) -> bool:
        return self in (EditOp.MM, EditOp.KM)


@dataclass(frozen=True)
class EditStep:
    """One edit: op, type, and the cursor positions at step entry (1-based)."""

    op: EditOp
    rev_type: str
    d1_pos: int
    d2_pos: int

    @property
    def label(self) -> str:
        return f"{self.op.value}-{self.rev_type}"


@dataclass(frozen=True)
class EditSequence:
    steps: tuple[EditStep, ...]
    m: int
    n: int

    def __post_init__(self):
        mm = sum(1 for s in self.steps if s.op is EditOp.MM)
        mk = sum(1 for s in self.steps if s.op is EditOp.MK)
        km = sum(1 for s in self.steps if s.op is EditOp.KM)
        if mm + mk != self.m or mm + km != self.n:
            raise TransformError(
                f"cursor closure violated: ops consume ({mm + mk}, {mm + km}) "
                f"sentences of ({self.m}, {self.n})"
            )

    @classmethod
    def from_ops(
        cls, ops: Sequence[EditOp], m: int, n: int, types: Optional[Sequence[str]] = None
    ) -> "EditSequence":
        """Build a sequence from an op list, computing cursor positions;
        types default to the dummy Nochange placeholder."""
        if types is None:
            types = [DUMMY_TYPE] * len(ops)
        if len(types) != len(ops):
            raise TransformError("ops and types must have equal length")
        steps = []
        i, j = 1, 1
        for op, t in zip(ops, types):
            if op.moves_d1 and i > m:
                raise TransformError(f"op {op} at ({i},{j}) moves D1 cursor past {m}")
            if op.moves_d2 and j > n:
                raise TransformError(f"op {op} at ({i},{j}) moves D2 cursor past {n}")
            steps.append(EditStep(op=op, rev_type=str(t), d1_pos=i, d2_pos=j))
            i += op.moves_d1
            j += op.moves_d2
        if (i, j) != (m + 1, n + 1):
            raise TransformError(
                f"cursors ended at ({i},{j}), expected ({m + 1},{n + 1})"
            )
        return cls(steps=tuple(steps), m=m, n=n)

    @property
    def ops(self) -> tuple[EditOp, ...]:
        return tuple(s.op for s in self.steps)

    def skeleton(self) -> str:
        """Op-only rendering, e.g. "M-M K-M M-K"."""
        return " ".join(s.op.value for s in self.steps)

    def to_text(self) -> str:
        """Debug serialization, e.g. "M-M-Nochange K-M-Reasoning"."""
        return " ".join(s.label for s in self.steps)

    def with_types(self, types: Sequence[str]) -> "EditSequence":
        return EditSequence.from_ops(self.ops, self.m, self.n, types=types)

    def aligned_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (s.d1_pos, s.d2_pos) for s in self.steps if s.op is EditOp.MM
        )


def encode(
    pair: ParagraphPair, revisions: Iterable[Revision], strict: bool = True
) -> EditSequence:
    """Transform a revision list into an EditSequence.

    Requires the coverage bijection (every sentence on each side in exactly
    one revision) and no crossing alignments.  Where several unaligned
    revisions compete at the cursors, they are emitted in input-list order;
    strict mode additionally enforces that aligned sentences are identical
    exactly when the type is Nochange.
    """
    m, n = pair.m, pair.n
    revs = list(revisions)
    aligned: dict[int, tuple[int, Revision]] = {}
    adds: dict[int, tuple[int, Revision]] = {}
    dels: dict[int, tuple[int, Revision]] = {}
    for order, r in enumerate(revs):
        if r.d1_index is not None and (r.d1_index < 1 or r.d1_index > m):
            raise TransformError(f"d1_index {r.d1_index} out of range 1..{m}")
        if r.d2_index is not None and (r.d2_index < 1 or r.d2_index > n):
            raise TransformError(f"d2_index {r.d2_index} out of range 1..{n}")
        if r.op is RevisionOp.ADD:
            if r.d2_index in adds:
                raise TransformError(f"D2 sentence {r.d2_index} covered twice")
            adds[r.d2_index] = (order, r)
        elif r.op is RevisionOp.DELETE:
            if r.d1_index in dels:
                raise TransformError(f"D1 sentence {r.d1_index} covered twice")
            dels[r.d1_index] = (order, r)
        else:
            if r.d1_index in aligned:
                raise TransformError(f"D1 sentence {r.d1_index} covered twice")
            aligned[r.d1_index] = (order, r)
    d1_covered = set(aligned) | set(dels)
    d2_covered = set(adds) | {r.d2_index for _, r in aligned.values()}
    if len(d2_covered) != len(adds) + len(aligned):
        raise TransformError("a D2 sentence is covered twice")
    if d1_covered != set(range(1, m + 1)):
        raise TransformError(
            f"uncovered D1 sentence(s) {sorted(set(range(1, m + 1)) - d1_covered)}"
        )
    if d2_covered != set(range(1, n + 1)):
        raise TransformError(
            f"uncovered D2 sentence(s) {sorted(set(range(1, n + 1)) - d2_covered)}"
        )
    pairs = sorted((r.d1_index, r.d2_index) for _, r in aligned.values())
    for (i, j), (i2, j2) in zip(pairs, pairs[1:]):
        if j >= j2:
            raise TransformError(
                f"crossing aligned pairs ({i},{j}) and ({i2},{j2})"
            )

    steps: list[EditStep] = []
    i, j = 1, 1
    while i <= m or j <= n:
        del_here = dels.get(i) if i <= m else None
        add_here = adds.get(j) if j <= n else None
        if del_here and add_here:
            # both pending at the cursors: input-list order decides
            if add_here[0] < del_here[0]:
                del_here = None
            else:
                add_here = None
        if add_here:
            steps.append(EditStep(EditOp.KM, str(add_here[1].rev_type), i, j))
            j += 1
        elif del_here:
            steps.append(EditStep(EditOp.MK, str(del_here[1].rev_type), i, j))
            i += 1
        else:
            order_rev = aligned.get(i)
            if order_rev is None or order_rev[1].d2_index != j:
                raise TransformError(
                    f"no revision consumes cursors ({i},{j})"  # unreachable after validation
                )
            r = order_rev[1]
            if strict:
                same = pair.d1_sentences[i - 1].text == pair.d2_sentences[j - 1].text
                if same != (r.op is RevisionOp.NOCHANGE):
                    raise TransformError(
                        f"pair ({i},{j}): Nochange shall mark identical sentences "
                        f"(texts {'identical' if same else 'differ'}, op {r.op})"
                    )
            steps.append(EditStep(EditOp.MM, str(r.rev_type), i, j))
            i += 1
            j += 1
    return EditSequence(steps=tuple(steps), m=m, n=n)


def decode(seq: EditSequence) -> list[Revision]:
    """Transform an EditSequence back into revisions, in step order.

    M-M yields Modify (Nochange when typed Nochange), M-K a Delete, K-M an
    Add; either gap order of K-M and M-K runs is accepted.
    """
    out: list[Revision] = []
    i, j = 1, 1
    for step in seq.steps:
        if (i, j) != (step.d1_pos, step.d2_pos):
            raise TransformError(
                f"step positions ({step.d1_pos},{step.d2_pos}) disagree with "
                f"cursor walk ({i},{j})"
            )
        t = str(step.rev_type)
        if step.op is EditOp.MM:
            op = RevisionOp.NOCHANGE if t == "Nochange" else RevisionOp.MODIFY
            out.append(Revision(d1_index=i, d2_index=j, op=op, rev_type=t))
            i += 1
            j += 1
        elif step.op is EditOp.KM:
            out.append(Revision(d1_index=None, d2_index=j, op=RevisionOp.ADD, rev_type=t))
            j += 1
        else:
            out.append(Revision(d1_index=i, d2_index=None, op=RevisionOp.DELETE, rev_type=t))
            i += 1
    if (i, j) != (seq.m + 1, seq.n + 1):
        raise TransformError(
            f"cursors ended at ({i},{j}), expected ({seq.m + 1},{seq.n + 1})"
        )
    return out


def canonical_ops(ops: Sequence[EditOp]) -> tuple[EditOp, ...]:
    """Canonical gap order: within each run between M-M anchors, all K-M
    steps precede all M-K steps.  Two op lists are the same alignment iff
    their canonical forms are equal."""
    out: list[EditOp] = []
    gap: list[EditOp] = []
    def flush():
        out.extend([EditOp.KM] * gap.count(EditOp.KM))
        out.extend([EditOp.MK] * gap.count(EditOp.MK))
        gap.clear()
    for op in ops:
        if op is EditOp.MM:
            flush()
            out.append(op)
        else:
            gap.append(op)
    flush()
    return tuple(out)


def canonical_key(seq: EditSequence) -> str:
    return " ".join(op.value for op in canonical_ops(seq.ops))


def count_sequences(m: int, n: int) -> int:
    """Number of distinct monotonic alignments (canonical op-skeletons) of an
    m-by-n paragraph pair: C(m+n, n)."""
    if m < 0 or n < 0:
        raise ValueError("m and n must be nonnegative")
    if m + n > 60:
        raise ValueError(f"m+n = {m + n} exceeds the supported bound of 60")
    return math.comb(m + n, n)
