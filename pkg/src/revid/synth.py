"""Synthetic draft-pair generator.

Produces corpora in the standard file formats with gold annotations whose
type frequencies follow a requested distribution.  Sentences carry
type-specific marker tokens so types are learnable from unigrams, and
content modifications rewrite sentences heavily so that a distance-threshold
aligner misses some of them: the injected alignment noise the joint approach
is meant to repair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import (
    DraftPair,
    ParagraphPair,
    Revision,
    RevisionOp,
    Sentence,
)

# Revision-type proportions shaped like the larger published revision corpus
# (counts 111/390/110/356/300/1265).
DEFAULT_TYPE_DIST = {
    "Claim": 111 / 2532,
    "Reasoning": 390 / 2532,
    "Evidence": 110 / 2532,
    "General": 356 / 2532,
    "Surface": 300 / 2532,
    "Nochange": 1265 / 2532,
}

_MARKERS = {
    "Claim": ["thesis", "claim", "believe", "argue"],
    "Reasoning": ["because", "therefore", "reason", "follows"],
    "Evidence": ["study", "data", "example", "source"],
    "General": ["overall", "context", "topic", "broadly"],
}

_FILLERS = [
    "the", "a", "an", "writer", "reader", "essay", "draft", "tone", "words",
    "people", "nature", "story", "idea", "point", "style", "voice", "image",
    "moment", "detail", "scene", "line", "page", "view", "sense", "change",
    "world", "light", "sound", "focus", "theme", "shape", "way", "turn",
    "makes", "shows", "tells", "keeps", "holds", "finds", "gives", "takes",
]

_TAGS = {"PUNCT": {".", ",", "!", ";"}}


def _tag_of(token: str) -> str:
    if token in _TAGS["PUNCT"]:
        return "PUNCT"
    for t, words in _MARKERS.items():
        if token in words:
            return "MARK"
    return "WORD"


@dataclass(frozen=True)
class SynthConfig:
    essays: int = 60
    paragraphs_per_essay: int = 3
    revisions_low: int = 4  # revision events per paragraph
    revisions_high: int = 8
    tokens_low: int = 8  # aligned sentences are long
    tokens_high: int = 14
    short_low: int = 3  # added/deleted sentences are short
    short_high: int = 5
    keep_fraction: float = 0.1  # tokens kept by a content rewrite
    content_op_modify: float = 0.5  # content events: modify vs add vs delete
    content_op_add: float = 0.25
    seed: int = 0
    type_dist: Optional[dict[str, float]] = None

    def distribution(self) -> tuple[list[str], np.ndarray]:
        dist = dict(self.type_dist or DEFAULT_TYPE_DIST)
        names = sorted(dist)
        probs = np.array([dist[n] for n in names], dtype=float)
        if (probs < 0).any() or probs.sum() <= 0:
            raise ValueError("type distribution must be nonnegative and nonzero")
        return names, probs / probs.sum()


def _sentence(tokens: list[str]) -> Sentence:
    return Sentence(
        text=" ".join(tokens),
        tokens=tuple(tokens),
        pos_tags=tuple(_tag_of(t) for t in tokens),
    )


def _base_tokens(
    rng: np.random.Generator, cfg: SynthConfig, markers=None, short=False
) -> list[str]:
    lo, hi = (cfg.short_low, cfg.short_high) if short else (cfg.tokens_low, cfg.tokens_high)
    n = int(rng.integers(lo, hi + 1))
    toks = [str(_FILLERS[k]) for k in rng.integers(0, len(_FILLERS), size=n)]
    if markers:
        for token in markers:
            pos = int(rng.integers(0, len(toks) + 1))
            toks.insert(pos, str(token))
    if not short and rng.random() < 0.3:
        toks.insert(int(rng.integers(1, len(toks))), ",")
    toks.append(".")
    return toks


def _pick_markers(rng: np.random.Generator, rtype: str) -> list[str]:
    words = _MARKERS[rtype]
    count = int(rng.integers(1, 3))
    idx = rng.choice(len(words), size=count, replace=False)
    return [str(words[int(k)]) for k in idx]


def _surface_perturb(rng: np.random.Generator, tokens: list[str]) -> list[str]:
    """Light rewrite: swap one filler word; guaranteed to differ."""
    out = list(tokens)
    positions = [k for k, t in enumerate(out) if t not in _TAGS["PUNCT"]]
    pos = int(positions[int(rng.integers(0, len(positions)))])
    old = out[pos]
    choices = [w for w in _FILLERS if w != old]
    out[pos] = str(choices[int(rng.integers(0, len(choices)))])
    if rng.random() < 0.4:
        out.insert(int(rng.integers(1, len(out))), ",")
    return out


def _content_rewrite(rng, cfg: SynthConfig, tokens: list[str], markers) -> list[str]:
    """Heavy rewrite: keep a short prefix, regenerate the rest; the marker
    tokens survive the rewrite, which is what lets a sequence model re-align
    pairs a surface-distance aligner gives up on."""
    keep = max(1, int(len(tokens) * cfg.keep_fraction))
    head = [t for t in tokens[:keep] if t != "."]
    tail = _base_tokens(rng, cfg, markers=markers)
    return head + tail


def generate(cfg: SynthConfig) -> tuple[list[DraftPair], dict[str, list[Revision]]]:
    rng = np.random.default_rng(cfg.seed)
    names, probs = cfg.distribution()
    drafts: list[DraftPair] = []
    annotations: dict[str, list[Revision]] = {}
    for e in range(cfg.essays):
        essay_id = f"essay{e:04d}"
        student_id = f"student{e:04d}"  # one essay per student: clean CV folds
        paragraphs = []
        for q in range(cfg.paragraphs_per_essay):
            pair_id = f"{essay_id}.p{q}"
            d1: list[Sentence] = []
            d2: list[Sentence] = []
            revs: list[Revision] = []
            events = int(rng.integers(cfg.revisions_low, cfg.revisions_high + 1))
            for _ in range(events):
                rtype = names[int(rng.choice(len(names), p=probs))]
                if rtype == "Nochange":
                    s = _sentence(_base_tokens(rng, cfg))
                    d1.append(s)
                    d2.append(s)
                    revs.append(Revision(len(d1), len(d2), RevisionOp.NOCHANGE, "Nochange"))
                elif rtype == "Surface":
                    toks = _base_tokens(rng, cfg)
                    d1.append(_sentence(toks))
                    d2.append(_sentence(_surface_perturb(rng, toks)))
                    revs.append(Revision(len(d1), len(d2), RevisionOp.MODIFY, "Surface"))
                else:
                    markers = _pick_markers(rng, rtype)
                    r = rng.random()
                    if r < cfg.content_op_modify:
                        toks = _base_tokens(rng, cfg, markers=markers)
                        d1.append(_sentence(toks))
                        d2.append(_sentence(_content_rewrite(rng, cfg, toks, markers)))
                        revs.append(Revision(len(d1), len(d2), RevisionOp.MODIFY, rtype))
                    elif r < cfg.content_op_modify + cfg.content_op_add:
                        d2.append(_sentence(_base_tokens(rng, cfg, markers=markers, short=True)))
                        revs.append(Revision(None, len(d2), RevisionOp.ADD, rtype))
                    else:
                        d1.append(_sentence(_base_tokens(rng, cfg, markers=markers, short=True)))
                        revs.append(Revision(len(d1), None, RevisionOp.DELETE, rtype))
            if not d1 and not d2:  # all events were skipped sides; force one
                s = _sentence(_base_tokens(rng, cfg))
                d1.append(s)
                d2.append(s)
                revs.append(Revision(1, 1, RevisionOp.NOCHANGE, "Nochange"))
            paragraphs.append(
                ParagraphPair(pair_id=pair_id, d1_sentences=tuple(d1), d2_sentences=tuple(d2))
            )
            annotations[pair_id] = revs
        drafts.append(
            DraftPair(essay_id=essay_id, student_id=student_id,
                      paragraph_pairs=tuple(paragraphs))
        )
    return drafts, annotations


def type_frequencies(annotations: dict[str, list[Revision]]) -> dict[str, float]:
    counts: dict[str, int] = {}
    total = 0
    for revs in annotations.values():
        for r in revs:
            counts[str(r.rev_type)] = counts.get(str(r.rev_type), 0) + 1
            total += 1
    return {t: c / total for t, c in counts.items()} if total else {}
