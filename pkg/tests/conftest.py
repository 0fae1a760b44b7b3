"""Shared fixtures: paper-derived paragraph fixtures and random-instance
generators used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from revid.corpus import ParagraphPair, Revision, RevisionOp, Sentence
from revid.editseq import EditOp, EditSequence


def sent(text: str) -> Sentence:
    return Sentence.make(text)


# Worked pipeline-error example: four D1 sentences, four D2 sentences, gold
# all aligned (three Surface modifies plus one unchanged), automatic
# extraction missing the (2,2) and (3,3) alignments.
TABLE1_D1 = (
    "Tone has a lot to say for Louv.",
    "On account that Louv uses words to sound completely annoyed and disgusted "
    "with how far people have drifted, says he is very disgusted and annoyed.",
    "The beginning paragraph tells that scientists can now, at will, change the "
    "colors of butterfly wings.",
    "Telling how humans are in control, at will, with nature.",
)
TABLE1_D2 = (
    "The way Louv “talks” throughout the essay is his tone.",
    "Using words to sound very annoyed and completely disgusted.",
    "In the beginning of the excerpt, Louv tells of what scientists are doing "
    "now with nature, such as changing the colors of butterfly wings.",
    "Telling how humans are in control, at will, with nature.",
)


@pytest.fixture
def table1_pair() -> ParagraphPair:
    return ParagraphPair(
        pair_id="table1",
        d1_sentences=tuple(sent(t) for t in TABLE1_D1),
        d2_sentences=tuple(sent(t) for t in TABLE1_D2),
    )


@pytest.fixture
def table1_gold() -> list[Revision]:
    return [
        Revision(1, 1, RevisionOp.MODIFY, "Surface"),
        Revision(2, 2, RevisionOp.MODIFY, "Surface"),
        Revision(3, 3, RevisionOp.MODIFY, "Surface"),
        Revision(4, 4, RevisionOp.NOCHANGE, "Nochange"),
    ]


@pytest.fixture
def table1_auto() -> list[Revision]:
    # the erroneous automatic extraction, in table row order
    return [
        Revision(1, 1, RevisionOp.MODIFY, "Surface"),
        Revision(2, None, RevisionOp.DELETE, "Reasoning"),
        Revision(None, 2, RevisionOp.ADD, "Reasoning"),
        Revision(3, None, RevisionOp.DELETE, "Reasoning"),
        Revision(None, 3, RevisionOp.ADD, "Reasoning"),
        Revision(4, 4, RevisionOp.NOCHANGE, "Nochange"),
    ]


# A 3x3 paragraph with one added D2 sentence, one deleted D1 sentence and one
# lightly modified pair, mirroring the worked transformation example.
@pytest.fixture
def fig2_pair() -> ParagraphPair:
    shared = sent("The essay opens with a quiet scene.")
    return ParagraphPair(
        pair_id="fig2",
        d1_sentences=(
            shared,
            sent("He says this because the image keeps its hold."),
            sent("The final line stays with the reader."),
        ),
        d2_sentences=(
            shared,
            sent("This follows because the tone shifts early."),
            sent("The final line stays with the reader here."),
        ),
    )


@pytest.fixture
def fig2_gold() -> list[Revision]:
    # caption order: the Add precedes the Delete
    return [
        Revision(1, 1, RevisionOp.NOCHANGE, "Nochange"),
        Revision(None, 2, RevisionOp.ADD, "Reasoning"),
        Revision(2, None, RevisionOp.DELETE, "Reasoning"),
        Revision(3, 3, RevisionOp.MODIFY, "Surface"),
    ]


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

CHANGED_TYPES = ("Claim", "Reasoning", "Evidence", "General", "Surface")

_WORDS = (
    "the", "a", "draft", "essay", "tone", "line", "scene", "voice", "reader",
    "keeps", "shows", "turns", "because", "study", "overall", "thesis",
)


def random_sentence(rng: np.random.Generator, tag: str = "") -> Sentence:
    n = int(rng.integers(3, 8))
    toks = [str(_WORDS[int(k)]) for k in rng.integers(0, len(_WORDS), size=n)]
    if tag:
        toks.append(tag)  # guarantees distinct text when needed
    toks.append(".")
    return Sentence.make(" ".join(toks))


def random_walk_ops(rng: np.random.Generator, m: int, n: int) -> list[EditOp]:
    """Uniformly random feasible cursor walk (any gap interleaving)."""
    ops: list[EditOp] = []
    i, j = 1, 1
    while i <= m or j <= n:
        choices = []
        if i <= m and j <= n:
            choices.append(EditOp.MM)
        if j <= n:
            choices.append(EditOp.KM)
        if i <= m:
            choices.append(EditOp.MK)
        op = choices[int(rng.integers(0, len(choices)))]
        ops.append(op)
        i += op.moves_d1
        j += op.moves_d2
    return ops


def random_instance(
    rng: np.random.Generator, max_m: int = 6, max_n: int = 6
) -> tuple[ParagraphPair, list[Revision], EditSequence]:
    """Random paragraph pair + revision list in cursor-walk order + the
    matching gold EditSequence (types included)."""
    while True:
        m = int(rng.integers(0, max_m + 1))
        n = int(rng.integers(0, max_n + 1))
        if m + n > 0:
            break
    ops = random_walk_ops(rng, m, n)
    d1: list = [None] * m
    d2: list = [None] * n
    revisions: list[Revision] = []
    types: list[str] = []
    i, j = 1, 1
    serial = 0
    for op in ops:
        serial += 1
        if op is EditOp.MM:
            if rng.random() < 0.35:
                s = random_sentence(rng, f"s{serial}")
                d1[i - 1] = s
                d2[j - 1] = s
                revisions.append(Revision(i, j, RevisionOp.NOCHANGE, "Nochange"))
                types.append("Nochange")
            else:
                t = CHANGED_TYPES[int(rng.integers(0, len(CHANGED_TYPES)))]
                d1[i - 1] = random_sentence(rng, f"a{serial}")
                d2[j - 1] = random_sentence(rng, f"b{serial}")
                revisions.append(Revision(i, j, RevisionOp.MODIFY, t))
                types.append(t)
            i += 1
            j += 1
        elif op is EditOp.KM:
            t = CHANGED_TYPES[int(rng.integers(0, len(CHANGED_TYPES)))]
            d2[j - 1] = random_sentence(rng, f"add{serial}")
            revisions.append(Revision(None, j, RevisionOp.ADD, t))
            types.append(t)
            j += 1
        else:
            t = CHANGED_TYPES[int(rng.integers(0, len(CHANGED_TYPES)))]
            d1[i - 1] = random_sentence(rng, f"del{serial}")
            revisions.append(Revision(i, None, RevisionOp.DELETE, t))
            types.append(t)
            i += 1
    pair = ParagraphPair(
        pair_id=f"rand-{m}x{n}", d1_sentences=tuple(d1), d2_sentences=tuple(d2)
    )
    seq = EditSequence.from_ops(ops, m, n, types=types)
    return pair, revisions, seq
