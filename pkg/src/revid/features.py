"""Per-step feature extraction for the sequence models.

Features depend only on the paragraph texts and the two cursor positions,
never on labels, so a candidate's op-skeleton fully determines its feature
matrix.  Four groups: location (cursor positions and paragraph-boundary
indicators), textual (lengths, edit distance and length/punctuation deltas
for the cursor pair and its two lookahead pairs), language (POS counts and
deltas) and unigrams (token presence at the cursors).

Numeric features are also emitted bucketed, since linear emissions over raw
integers make poor CRF evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import sparse

from .corpus import ParagraphPair, Sentence
from .editseq import EditSequence
from .textmetrics import levenshtein, normalized_levenshtein, sentence_stats

PAIR_SUFFIXES = ("cur", "d2next", "d1next")  # (p,q), (p,q+1), (p+1,q)


@dataclass(frozen=True)
class FeatureConfig:
    unigram: bool = True
    location: bool = True
    textual: bool = True
    language: bool = True
    edit_granularity: str = "token"  # "token" or "char" for textual distances

    def __post_init__(self):
        if not (self.unigram or self.location or self.textual or self.language):
            raise ValueError("at least one feature group must be enabled")
        if self.edit_granularity not in ("token", "char"):
            raise ValueError(f"unknown edit granularity {self.edit_granularity!r}")

    def to_dict(self) -> dict:
        return {
            "unigram": self.unigram,
            "location": self.location,
            "textual": self.textual,
            "language": self.language,
            "edit_granularity": self.edit_granularity,
        }


def _pos_bucket(p: int) -> str:
    return str(p) if p <= 4 else "5+"


def _count_bucket(c: int) -> str:
    return str(c) if c <= 4 else "5+"


def _diff_bucket(d: int) -> str:
    if d <= -3:
        return "-3-"
    if d >= 3:
        return "3+"
    return str(d)


def _edit_units(s: Sentence, granularity: str):
    if granularity == "char":
        return s.text.lower()
    return s.tokens


def _pair_features(out, sfx: str, s1: Sentence, s2: Sentence, granularity: str):
    a, b = _edit_units(s1, granularity), _edit_units(s2, granularity)
    lev = levenshtein(a, b)
    out[f"txt:lev_{sfx}"] = float(lev)
    out[f"txt:lev_{sfx}={_count_bucket(lev)}"] = 1.0
    out[f"txt:nlev_{sfx}"] = normalized_levenshtein(a, b)
    st1, st2 = sentence_stats(s1), sentence_stats(s2)
    ld = st1.token_count - st2.token_count
    out[f"txt:len_diff_{sfx}"] = float(ld)
    out[f"txt:len_diff_abs_{sfx}"] = float(abs(ld))
    out[f"txt:len_diff_{sfx}={_diff_bucket(ld)}"] = 1.0
    pd = st1.punct_count - st2.punct_count
    out[f"txt:punct_diff_{sfx}"] = float(pd)
    out[f"txt:punct_diff_abs_{sfx}"] = float(abs(pd))
    out[f"txt:punct_diff_{sfx}={_diff_bucket(pd)}"] = 1.0


def _pos_counts(s: Sentence) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tag in s.pos_tags:
        counts[tag] = counts.get(tag, 0) + 1
    return counts


def extract(
    pair: ParagraphPair, d1_pos: int, d2_pos: int, config: FeatureConfig
) -> dict[str, float]:
    """Sparse feature vector at cursor positions (d1_pos, d2_pos).

    Positions one past the end are legal (that side is exhausted); features
    of out-of-bounds sentences and lookahead pairs are simply omitted.
    """
    m, n = pair.m, pair.n
    if not 1 <= d1_pos <= m + 1:
        raise ValueError(f"d1_pos {d1_pos} out of range 1..{m + 1}")
    if not 1 <= d2_pos <= n + 1:
        raise ValueError(f"d2_pos {d2_pos} out of range 1..{n + 1}")
    s1 = pair.d1_sentences[d1_pos - 1] if d1_pos <= m else None
    s2 = pair.d2_sentences[d2_pos - 1] if d2_pos <= n else None
    out: dict[str, float] = {}

    if config.location:
        out["loc:d1_pos"] = float(d1_pos)
        out["loc:d2_pos"] = float(d2_pos)
        out[f"loc:d1_pos={_pos_bucket(d1_pos)}"] = 1.0
        out[f"loc:d2_pos={_pos_bucket(d2_pos)}"] = 1.0
        if d1_pos == 1:
            out["loc:d1_begin"] = 1.0
        if d1_pos >= m:
            out["loc:d1_end"] = 1.0
        if d2_pos == 1:
            out["loc:d2_begin"] = 1.0
        if d2_pos >= n:
            out["loc:d2_end"] = 1.0

    lookahead = [("cur", s1, s2)]
    if d2_pos + 1 <= n:  # lookahead omitted when it would cross the boundary
        lookahead.append(("d2next", s1, pair.d2_sentences[d2_pos]))
    if d1_pos + 1 <= m:
        lookahead.append(("d1next", pair.d1_sentences[d1_pos], s2))

    if config.textual:
        if s1 is not None:
            out["txt:len_d1"] = float(sentence_stats(s1).token_count)
        if s2 is not None:
            out["txt:len_d2"] = float(sentence_stats(s2).token_count)
        for sfx, a, b in lookahead:
            if a is not None and b is not None:
                _pair_features(out, sfx, a, b, config.edit_granularity)

    if config.language:
        for side, s in (("d1", s1), ("d2", s2)):
            if s is not None:
                for tag, c in _pos_counts(s).items():
                    out[f"pos:{side}:{tag}"] = float(c)
        for sfx, a, b in lookahead:
            if a is not None and b is not None:
                ca, cb = _pos_counts(a), _pos_counts(b)
                for tag in set(ca) | set(cb):
                    out[f"pos:diff_{sfx}:{tag}"] = float(ca.get(tag, 0) - cb.get(tag, 0))

    if config.unigram:
        for side, s in (("d1", s1), ("d2", s2)):
            if s is not None:
                for tok in set(t.lower() for t in s.tokens):
                    out[f"uni:{side}:{tok}"] = 1.0
    return out


class ParagraphFeatures:
    """Position-keyed feature cache for one paragraph pair."""

    def __init__(self, pair: ParagraphPair, config: FeatureConfig):
        self.pair = pair
        self.config = config
        self._cache: dict[tuple[int, int], dict[str, float]] = {}

    def at(self, d1_pos: int, d2_pos: int) -> dict[str, float]:
        key = (d1_pos, d2_pos)
        vec = self._cache.get(key)
        if vec is None:
            vec = extract(self.pair, d1_pos, d2_pos, self.config)
            self._cache[key] = vec
        return vec

    def for_sequence(self, seq: EditSequence) -> list[dict[str, float]]:
        return [self.at(s.d1_pos, s.d2_pos) for s in seq.steps]


class FeatureSpace:
    """Frozen feature-name -> column-index mapping shared by all models."""

    def __init__(self, names: Iterable[str]):
        self.names: tuple[str, ...] = tuple(sorted(names))
        self.index: dict[str, int] = {name: i for i, name in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    @classmethod
    def fit(cls, vectors: Iterable[dict[str, float]], min_count: int = 2) -> "FeatureSpace":
        """Collect names from training vectors; names seen fewer than
        min_count times are dropped."""
        counts: dict[str, int] = {}
        for vec in vectors:
            for name in vec:
                counts[name] = counts.get(name, 0) + 1
        return cls(name for name, c in counts.items() if c >= min_count)

    def matrix(self, vectors: list[dict[str, float]]) -> sparse.csr_matrix:
        """CSR design matrix (steps x features); unknown names are ignored."""
        data, indices, indptr = [], [], [0]
        for vec in vectors:
            cols = sorted(
                (self.index[name], value)
                for name, value in vec.items()
                if name in self.index
            )
            indices.extend(c for c, _ in cols)
            data.extend(v for _, v in cols)
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.asarray(data, dtype=np.float64), indices, indptr),
            shape=(len(vectors), len(self.names)),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for name in self.names:
                fh.write(f"{name}\t{self.index[name]}\n")

    @classmethod
    def load(cls, path) -> "FeatureSpace":
        names = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line:
                    names.append(line.split("\t")[0])
        return cls(names)
