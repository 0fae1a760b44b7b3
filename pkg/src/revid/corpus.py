"""Drafts, sentences, revision records and the corpus/annotation file formats.

A corpus is a list of essay draft pairs; each draft pair holds paragraph
pairs of pre-segmented, pre-tokenized sentences.  Revisions are the
user-facing output records: (d1_index, d2_index, op, type) tuples where a
missing index marks an Add or Delete.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

from .errors import AnnotationError, CorpusFormatError


class RevisionType(str, enum.Enum):
    """The six fine-grained revision purposes."""

    CLAIM = "Claim"
    REASONING = "Reasoning"
    EVIDENCE = "Evidence"
    GENERAL = "General"
    SURFACE = "Surface"
    NOCHANGE = "Nochange"

    def __str__(self):  # keep file formats readable
        return self.value


# Coarse class names used by the 3- and 4-class schemes.
CONTENT = "Content"
SUPPORT = "Support"

_THREE_MAP = {
    "Claim": CONTENT,
    "Reasoning": CONTENT,
    "Evidence": CONTENT,
    "General": CONTENT,
    "Support": CONTENT,
    "Content": CONTENT,
    "Surface": "Surface",
    "Nochange": "Nochange",
}
_FOUR_MAP = {
    "Claim": "Claim",
    "Reasoning": SUPPORT,
    "Evidence": SUPPORT,
    "General": SUPPORT,
    "Support": SUPPORT,
    "Surface": "Surface",
    "Nochange": "Nochange",
}


class ClassScheme(enum.Enum):
    """Granularity of the revision-type label space."""

    SIX = 6
    FOUR = 4
    THREE = 3

    @property
    def classes(self) -> tuple[str, ...]:
        """All class names of the scheme, Nochange included."""
        if self is ClassScheme.SIX:
            return tuple(t.value for t in RevisionType)
        if self is ClassScheme.FOUR:
            return ("Claim", SUPPORT, "Surface", "Nochange")
        return (CONTENT, "Surface", "Nochange")

    def map_type(self, rev_type: str) -> str:
        """Map a (fine or already-coarse) type name onto this scheme."""
        name = str(rev_type)
        if self is ClassScheme.SIX:
            if name not in _THREE_MAP:  # same key set as the fine types
                raise ValueError(f"unknown revision type: {name!r}")
            return name
        table = _THREE_MAP if self is ClassScheme.THREE else _FOUR_MAP
        try:
            return table[name]
        except KeyError:
            raise ValueError(
                f"cannot map type {name!r} under the {self.value}-class scheme"
            ) from None

    @classmethod
    def from_int(cls, n: int) -> "ClassScheme":
        for s in cls:
            if s.value == n:
                return s
        raise ValueError(f"no {n}-class scheme (choose 3, 4 or 6)")


class RevisionOp(str, enum.Enum):
    ADD = "Add"
    DELETE = "Delete"
    MODIFY = "Modify"
    NOCHANGE = "Nochange"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Sentence:
    """One pre-tokenized sentence; pos_tags always parallel to tokens."""

    text: str
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...]

    def __post_init__(self):
        if self.text.strip() and not self.tokens:
            raise ValueError("nonempty sentence text requires tokens")
        if len(self.pos_tags) != len(self.tokens):
            raise ValueError(
                f"{len(self.pos_tags)} pos tags for {len(self.tokens)} tokens"
            )

    @classmethod
    def make(cls, text: str, tokens=None, pos_tags=None, tagger=None) -> "Sentence":
        """Build a sentence, falling back to whitespace tokens and the
        degenerate tagger when the corpus carries neither."""
        toks = tuple(tokens) if tokens is not None else tuple(text.split())
        if pos_tags is not None:
            tags = tuple(pos_tags)
        elif tagger is not None:
            tags = tuple(tagger.tag(list(toks)))
        else:
            tags = ("X",) * len(toks)
        return cls(text=text, tokens=toks, pos_tags=tags)


@dataclass(frozen=True)
class ParagraphPair:
    """Aligned paragraph from draft 1 and draft 2; the unit of modeling."""

    pair_id: str
    d1_sentences: tuple[Sentence, ...]
    d2_sentences: tuple[Sentence, ...]

    def __post_init__(self):
        if not self.d1_sentences and not self.d2_sentences:
            raise ValueError(f"paragraph pair {self.pair_id}: both sides empty")

    @property
    def m(self) -> int:
        return len(self.d1_sentences)

    @property
    def n(self) -> int:
        return len(self.d2_sentences)


@dataclass(frozen=True)
class DraftPair:
    essay_id: str
    student_id: str
    paragraph_pairs: tuple[ParagraphPair, ...]


@dataclass(frozen=True)
class Revision:
    """One revision record: where (indices), what (op) and why (type).

    Indices are 1-based; Add has no d1_index, Delete no d2_index.  The op is
    Nochange exactly when the type is Nochange.
    """

    d1_index: Optional[int]
    d2_index: Optional[int]
    op: RevisionOp
    rev_type: str

    def __post_init__(self):
        if self.op is RevisionOp.ADD and not (self.d1_index is None and self.d2_index):
            raise ValueError(f"Add revision must have only a d2 index: {self}")
        if self.op is RevisionOp.DELETE and not (self.d2_index is None and self.d1_index):
            raise ValueError(f"Delete revision must have only a d1 index: {self}")
        if self.op in (RevisionOp.MODIFY, RevisionOp.NOCHANGE) and not (
            self.d1_index and self.d2_index
        ):
            raise ValueError(f"{self.op} revision must have both indices: {self}")
        if (self.op is RevisionOp.NOCHANGE) != (str(self.rev_type) == "Nochange"):
            raise ValueError(f"Nochange op and Nochange type must coincide: {self}")


def apply_scheme(revisions: Iterable[Revision], scheme: ClassScheme) -> list[Revision]:
    """Coarsen revision types under the given scheme; everything else is kept."""
    return [replace(r, rev_type=scheme.map_type(r.rev_type)) for r in revisions]


# ---------------------------------------------------------------------------
# Corpus file format (line-oriented TSV, UTF-8):
#   #essay <TAB> essay_id <TAB> student_id
#   #para  <TAB> pair_id
#   D1|D2  <TAB> index <TAB> text [<TAB> tok1 tok2 ... <TAB> tag1 tag2 ...]
# ---------------------------------------------------------------------------


def load_corpus(path, tagger=None) -> list[DraftPair]:
    """Parse a corpus file; raises CorpusFormatError naming file/line/rule."""
    path = Path(path)
    drafts: list[DraftPair] = []
    seen_essays: set[str] = set()
    seen_pairs: set[str] = set()

    cur_essay = None  # (essay_id, student_id, [ParagraphPair])
    cur_para = None  # (pair_id, [d1 sentences], [d2 sentences])

    def err(line_no, rule):
        raise CorpusFormatError(path, line_no, rule)

    def close_para(line_no):
        nonlocal cur_para
        if cur_para is None:
            return
        pid, d1, d2 = cur_para
        if not d1 and not d2:
            err(line_no, f"paragraph {pid!r} has no sentences")
        cur_essay[2].append(
            ParagraphPair(pair_id=pid, d1_sentences=tuple(d1), d2_sentences=tuple(d2))
        )
        cur_para = None

    def close_essay(line_no):
        nonlocal cur_essay
        if cur_essay is None:
            return
        close_para(line_no)
        essay_id, student_id, paras = cur_essay
        if not paras:
            err(line_no, f"essay {essay_id!r} has no paragraphs")
        drafts.append(
            DraftPair(essay_id=essay_id, student_id=student_id, paragraph_pairs=tuple(paras))
        )
        cur_essay = None

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            kind = fields[0]
            if kind == "#essay":
                if len(fields) != 3:
                    err(line_no, "#essay line needs: #essay<TAB>essay_id<TAB>student_id")
                close_essay(line_no)
                essay_id, student_id = fields[1], fields[2]
                if essay_id in seen_essays:
                    err(line_no, f"duplicate essay_id {essay_id!r}")
                if not student_id:
                    err(line_no, "student_id must be nonempty")
                seen_essays.add(essay_id)
                cur_essay = (essay_id, student_id, [])
            elif kind == "#para":
                if cur_essay is None:
                    err(line_no, "#para before any #essay")
                if len(fields) != 2:
                    err(line_no, "#para line needs: #para<TAB>pair_id")
                close_para(line_no)
                pid = fields[1]
                if pid in seen_pairs:
                    err(line_no, f"duplicate pair_id {pid!r}")
                seen_pairs.add(pid)
                cur_para = (pid, [], [])
            elif kind in ("D1", "D2"):
                if cur_para is None:
                    err(line_no, "sentence line before any #para")
                if len(fields) not in (3, 5):
                    err(
                        line_no,
                        "sentence line needs 3 or 5 fields: side, index, text[, tokens, tags]",
                    )
                try:
                    index = int(fields[1])
                except ValueError:
                    err(line_no, f"sentence index {fields[1]!r} is not an integer")
                side = cur_para[1] if kind == "D1" else cur_para[2]
                if index != len(side) + 1:
                    err(
                        line_no,
                        f"{kind} index {index} out of order (expected {len(side) + 1})",
                    )
                text = fields[2]
                tokens = fields[3].split(" ") if len(fields) == 5 else None
                tags = fields[4].split(" ") if len(fields) == 5 else None
                if tokens is not None and tags is not None and len(tokens) != len(tags):
                    err(
                        line_no,
                        f"{len(tags)} pos tags for {len(tokens)} tokens",
                    )
                try:
                    side.append(Sentence.make(text, tokens, tags, tagger=tagger))
                except ValueError as exc:
                    err(line_no, str(exc))
            else:
                err(line_no, f"unknown line kind {kind!r}")
    close_essay("EOF")
    return drafts


def save_corpus(drafts: Iterable[DraftPair], path) -> None:
    """Inverse of load_corpus; load(save(x)) == x on all fields."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in drafts:
            fh.write(f"#essay\t{d.essay_id}\t{d.student_id}\n")
            for p in d.paragraph_pairs:
                fh.write(f"#para\t{p.pair_id}\n")
                for side, sents in (("D1", p.d1_sentences), ("D2", p.d2_sentences)):
                    for i, s in enumerate(sents, start=1):
                        fh.write(
                            f"{side}\t{i}\t{s.text}\t{' '.join(s.tokens)}\t{' '.join(s.pos_tags)}\n"
                        )


# ---------------------------------------------------------------------------
# Annotation file format (TSV): pair_id, d1_index|-, d2_index|-, op, rev_type
# ---------------------------------------------------------------------------


def _check_coverage(pair: ParagraphPair, revisions: list[Revision]) -> None:
    """Coverage bijection: every sentence on each side in exactly one revision;
    aligned pairs must not cross."""
    d1_seen: set[int] = set()
    d2_seen: set[int] = set()
    aligned: list[tuple[int, int]] = []
    for r in revisions:
        if r.d1_index is not None:
            if not 1 <= r.d1_index <= pair.m:
                raise AnnotationError(
                    f"{pair.pair_id}: d1_index {r.d1_index} out of range 1..{pair.m}"
                )
            if r.d1_index in d1_seen:
                raise AnnotationError(
                    f"{pair.pair_id}: D1 sentence {r.d1_index} covered twice"
                )
            d1_seen.add(r.d1_index)
        if r.d2_index is not None:
            if not 1 <= r.d2_index <= pair.n:
                raise AnnotationError(
                    f"{pair.pair_id}: d2_index {r.d2_index} out of range 1..{pair.n}"
                )
            if r.d2_index in d2_seen:
                raise AnnotationError(
                    f"{pair.pair_id}: D2 sentence {r.d2_index} covered twice"
                )
            d2_seen.add(r.d2_index)
        if r.d1_index is not None and r.d2_index is not None:
            aligned.append((r.d1_index, r.d2_index))
    for side, seen, total in (("D1", d1_seen, pair.m), ("D2", d2_seen, pair.n)):
        missing = sorted(set(range(1, total + 1)) - seen)
        if missing:
            raise AnnotationError(
                f"{pair.pair_id}: uncovered {side} sentence(s) {missing}"
            )
    aligned.sort()
    for (i, j), (i2, j2) in zip(aligned, aligned[1:]):
        if i < i2 and j >= j2:
            raise AnnotationError(
                f"{pair.pair_id}: crossing aligned pairs ({i},{j}) and ({i2},{j2})"
            )


def load_annotations(path, corpus: Iterable[DraftPair]) -> dict[str, list[Revision]]:
    """Parse gold revisions, validate coverage against the corpus, and
    return them keyed by pair_id in file order."""
    path = Path(path)
    pairs = {p.pair_id: p for d in corpus for p in d.paragraph_pairs}
    out: dict[str, list[Revision]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise CorpusFormatError(
                    path, line_no, "annotation line needs 5 tab-separated fields"
                )
            pid, d1s, d2s, op_s, type_s = fields
            if pid not in pairs:
                raise CorpusFormatError(path, line_no, f"unknown pair_id {pid!r}")
            try:
                d1 = None if d1s == "-" else int(d1s)
                d2 = None if d2s == "-" else int(d2s)
            except ValueError:
                raise CorpusFormatError(path, line_no, "indices must be integers or '-'")
            try:
                op = RevisionOp(op_s)
            except ValueError:
                raise CorpusFormatError(path, line_no, f"unknown op {op_s!r}")
            try:
                rev = Revision(d1_index=d1, d2_index=d2, op=op, rev_type=type_s)
            except ValueError as exc:
                raise CorpusFormatError(path, line_no, str(exc))
            out.setdefault(pid, []).append(rev)
    for pid, revs in out.items():
        _check_coverage(pairs[pid], revs)
    for pid, pair in pairs.items():
        if (pair.m or pair.n) and pid not in out:
            raise AnnotationError(f"{pid}: uncovered sentences (no annotation lines)")
    return out


def save_annotations(annotations: dict[str, list[Revision]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pid, revs in annotations.items():
            for r in revs:
                d1 = "-" if r.d1_index is None else str(r.d1_index)
                d2 = "-" if r.d2_index is None else str(r.d2_index)
                fh.write(f"{pid}\t{d1}\t{d2}\t{r.op}\t{r.rev_type}\n")
