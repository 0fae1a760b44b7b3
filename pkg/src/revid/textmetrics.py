"""String and token metrics: edit distance, sentence statistics, POS taggers."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import _kernels
from .corpus import Sentence


def _to_ids(a: Sequence, b: Sequence) -> tuple[np.ndarray, np.ndarray]:
    # shared symbol table so equal elements get equal ids
    table: dict = {}
    def ids(seq):
        out = np.empty(len(seq), dtype=np.int32)
        for i, x in enumerate(seq):
            out[i] = table.setdefault(x, len(table))
        return out
    return ids(a), ids(b)


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost insert/delete/substitute edit distance between two sequences
    (strings compare per character, lists per token)."""
    if len(a) == 0:
        return len(b)
    if len(b) == 0:
        return len(a)
    ia, ib = _to_ids(a, b)
    return _kernels.levenshtein_ids(ia, ib)


def normalized_levenshtein(a: Sequence, b: Sequence) -> float:
    """levenshtein(a, b) / max(|a|, |b|); 0.0 when both are empty."""
    denom = max(len(a), len(b))
    if denom == 0:
        return 0.0
    return levenshtein(a, b) / denom


def is_punct_token(token: str) -> bool:
    return bool(token) and all(unicodedata.category(c).startswith("P") for c in token)


@dataclass(frozen=True)
class SentenceStats:
    token_count: int
    char_count: int
    punct_count: int


def sentence_stats(sentence: Sentence) -> SentenceStats:
    """Token, character and punctuation-token counts for one sentence."""
    toks = sentence.tokens
    return SentenceStats(
        token_count=len(toks),
        char_count=sum(len(t) for t in toks),
        punct_count=sum(1 for t in toks if is_punct_token(t)),
    )


class PosTagger(Protocol):
    def tag(self, tokens: list[str]) -> list[str]: ...


class DegenerateTagger:
    """Emits "X" for every token; keeps the pipeline dependency-free."""

    def tag(self, tokens: list[str]) -> list[str]:
        return ["X"] * len(tokens)


class LexiconTagger:
    """Most-frequent-tag lookup from a token<TAB>tag lexicon file."""

    def __init__(self, lexicon: dict[str, str], default: str = "X"):
        self.lexicon = dict(lexicon)
        self.default = default

    @classmethod
    def from_file(cls, path, default: str = "X") -> "LexiconTagger":
        lex: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                token, tag = line.split("\t")
                lex[token] = tag
        return cls(lex, default=default)

    def tag(self, tokens: list[str]) -> list[str]:
        return [self.lexicon.get(t, self.lexicon.get(t.lower(), self.default)) for t in tokens]
