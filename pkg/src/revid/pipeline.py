"""End-to-end wiring: run configuration, model-bundle training and the
three prediction approaches (pipeline baseline, joint 1-best, joint
+N-candidate)."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import align, crf, editseq, mutate, seedgen
from .corpus import ClassScheme, DraftPair, ParagraphPair, Revision
from .errors import ModelFormatError, TrainingError
from .features import FeatureConfig, FeatureSpace, ParagraphFeatures

MODES = ("pipeline", "joint-1best", "joint-ncand")


@dataclass(frozen=True)
class RunConfig:
    scheme: int = 3
    seed_mode: str = "n-candidate"  # "one-best" or "n-candidate"
    n_candidates: int = 10
    seed: int = 13
    l2: float = 1.0
    gap_penalty: float = math.log(0.5)
    normalization: str = "normalized"  # or "raw"
    unigram: bool = True
    location: bool = True
    textual: bool = True
    language: bool = True
    edit_granularity: str = "token"
    align_granularity: str = "char"
    min_feature_count: int = 2
    lstm_hidden: int = 100
    lstm_epochs: int = 1
    lstm_iterations: int = 100
    lstm_lr: float = 0.1
    jobs: int = 1

    def __post_init__(self):
        ClassScheme.from_int(self.scheme)
        if self.seed_mode not in ("one-best", "n-candidate"):
            raise ValueError(f"unknown seed mode {self.seed_mode!r}")
        if self.normalization not in ("normalized", "raw"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")

    @property
    def class_scheme(self) -> ClassScheme:
        return ClassScheme.from_int(self.scheme)

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(
            unigram=self.unigram,
            location=self.location,
            textual=self.textual,
            language=self.language,
            edit_granularity=self.edit_granularity,
        )

    def to_json(self) -> str:
        payload = {k: getattr(self, k) for k in sorted(self.__dataclass_fields__)}
        return json.dumps(payload, sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:12]

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


def paragraph_rng(config_seed: int, pair_id: str) -> np.random.Generator:
    """Stable per-paragraph stream: reproducible under any parallel order."""
    digest = hashlib.sha256(f"{config_seed}:{pair_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


@dataclass
class ModelBundle:
    config: RunConfig
    scorer: align.AlignScorer
    crf_joint: crf.CrfModel
    crf_type: crf.CrfModel
    lstm: Optional[seedgen.LstmModel]
    space: FeatureSpace


def _gold_sequences(
    drafts: Iterable[DraftPair],
    annotations: dict[str, list[Revision]],
    config: RunConfig,
):
    """(pair, features, gold EditSequence) per annotated paragraph."""
    fc = config.feature_config()
    out = []
    for d in drafts:
        for p in d.paragraph_pairs:
            revs = annotations.get(p.pair_id)
            if revs is None:
                continue
            feats = ParagraphFeatures(p, fc)
            seq = editseq.encode(p, revs)
            out.append((p, feats, seq))
    return out


def train_bundle(
    drafts: list[DraftPair],
    annotations: dict[str, list[Revision]],
    config: RunConfig,
) -> ModelBundle:
    """Train scorer, joint and type-only CRFs, and (for n-candidate mode)
    the LSTM generator, on the annotated paragraphs."""
    scheme = config.class_scheme
    gold = _gold_sequences(drafts, annotations, config)
    if not gold:
        raise TrainingError("no annotated paragraphs to train on")

    step_vectors = [feats.at(s.d1_pos, s.d2_pos) for _, feats, seq in gold for s in seq.steps]
    space = FeatureSpace.fit(step_vectors, min_count=config.min_feature_count)

    joint_labels = crf.joint_alphabet(scheme)
    type_labels = crf.type_alphabet(scheme)
    joint_idx = {lab: k for k, lab in enumerate(joint_labels)}
    type_idx = {lab: k for k, lab in enumerate(type_labels)}
    joint_seqs, type_seqs = [], []
    for _, feats, seq in gold:
        X = space.matrix(feats.for_sequence(seq))
        y_joint = np.array(
            [joint_idx[f"{s.op.value}-{scheme.map_type(s.rev_type)}"] for s in seq.steps],
            dtype=np.int64,
        )
        y_type = np.array(
            [type_idx[scheme.map_type(s.rev_type)] for s in seq.steps], dtype=np.int64
        )
        joint_seqs.append((X, y_joint))
        type_seqs.append((X, y_type))

    meta = {"config_hash": config.config_hash(), "scheme": str(config.scheme)}
    crf_joint = crf.train(
        joint_seqs, joint_labels, space, l2=config.l2,
        meta={**meta, "kind": "joint"},
    )
    crf_type = crf.train(
        type_seqs, type_labels, space, l2=config.l2,
        meta={**meta, "kind": "type"},
    )

    rng = np.random.default_rng(config.seed)
    pairs = align.make_training_pairs(drafts, annotations, rng)
    scorer = align.train_scorer(pairs, granularity=config.align_granularity)

    lstm = None
    if config.seed_mode == "n-candidate":
        lstm = seedgen.train_lstm(
            joint_seqs, joint_labels, space,
            hidden=config.lstm_hidden, epochs=config.lstm_epochs,
            iterations=config.lstm_iterations, lr=config.lstm_lr,
            seed=config.seed,
        )
    return ModelBundle(
        config=config, scorer=scorer, crf_joint=crf_joint, crf_type=crf_type,
        lstm=lstm, space=space,
    )


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


@dataclass
class ParagraphPrediction:
    pair_id: str
    revisions: list[Revision]
    result: Optional[mutate.SearchResult] = None  # None for pipeline mode

    @property
    def generations(self) -> int:
        return self.result.generations_run if self.result else 0


def _pipeline_type_mask(model: crf.CrfModel, skeleton: editseq.EditSequence) -> np.ndarray:
    """Type-only labeling mask: an Add/Delete step must not be Nochange."""
    mask = np.ones((len(skeleton.steps), len(model.labels)), dtype=bool)
    nochange = model.label_index.get("Nochange")
    if nochange is not None:
        for t, step in enumerate(skeleton.steps):
            if step.op is not editseq.EditOp.MM:
                mask[t, nochange] = False
    return mask


def label_skeleton_types(
    bundle: ModelBundle,
    pair: ParagraphPair,
    skeleton: editseq.EditSequence,
    features: Optional[ParagraphFeatures] = None,
) -> list[Revision]:
    """Pipeline classification: keep the skeleton's ops, CRF-label types."""
    feats = features or ParagraphFeatures(pair, bundle.config.feature_config())
    model = bundle.crf_type
    labeling = crf.label(
        model, skeleton, feats, mask=_pipeline_type_mask(model, skeleton)
    )
    return editseq.decode(skeleton.with_types(list(labeling.labels)))


def predict_paragraph(
    bundle: ModelBundle, pair: ParagraphPair, mode: str
) -> ParagraphPrediction:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    config = bundle.config
    feats = ParagraphFeatures(pair, config.feature_config())
    alignment = align.global_align(pair, bundle.scorer, gap_penalty=config.gap_penalty)
    one_best = seedgen.one_best_seed(pair, alignment)

    if mode == "pipeline":
        revisions = label_skeleton_types(bundle, pair, one_best, feats)
        return ParagraphPrediction(pair_id=pair.pair_id, revisions=revisions)

    seeds = [(one_best, seedgen.ONE_BEST)]
    if mode == "joint-ncand":
        if bundle.lstm is None:
            raise ModelFormatError("bundle has no LSTM model; retrain with n-candidate mode")
        rng = paragraph_rng(config.seed, pair.pair_id)
        sampled = seedgen.sample_candidates(
            bundle.lstm, pair, feats, count=config.n_candidates, rng=rng
        )
        seeds.extend(sampled.candidates)
    result = mutate.search(
        seedgen.SeedSet.build(seeds), bundle.crf_joint, feats,
        normalization=config.normalization,
    )
    return ParagraphPrediction(
        pair_id=pair.pair_id, revisions=result.revisions, result=result
    )


def predict_corpus(
    bundle: ModelBundle, drafts: Iterable[DraftPair], mode: str
) -> dict[str, ParagraphPrediction]:
    """Predict every paragraph; results are identical for any job count
    because each paragraph's rng stream is derived from its pair_id."""
    pairs = [p for d in drafts for p in d.paragraph_pairs]
    jobs = max(1, bundle.config.jobs)
    if jobs == 1 or len(pairs) < 2:
        predictions = [predict_paragraph(bundle, p, mode) for p in pairs]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            predictions = list(
                pool.map(lambda p: predict_paragraph(bundle, p, mode), pairs)
            )
    return {p.pair_id: pred for p, pred in zip(pairs, predictions)}


# ---------------------------------------------------------------------------
# Bundle directory layout
# ---------------------------------------------------------------------------

SCORER_FILE = "align_scorer.txt"
CRF_JOINT_FILE = "crf_joint.txt"
CRF_TYPE_FILE = "crf_type.txt"
LSTM_FILE = "lstm.txt"
SPACE_FILE = "feature_space.tsv"
CONFIG_FILE = "config.json"


def save_bundle(bundle: ModelBundle, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(
        json.dumps(
            {"config": json.loads(bundle.config.to_json()),
             "config_hash": bundle.config.config_hash()},
            sort_keys=True, indent=2,
        ) + "\n",
        encoding="utf-8",
    )
    align.save_scorer(bundle.scorer, out / SCORER_FILE)
    crf.save_model(bundle.crf_joint, out / CRF_JOINT_FILE)
    crf.save_model(bundle.crf_type, out / CRF_TYPE_FILE)
    bundle.space.save(out / SPACE_FILE)
    if bundle.lstm is not None:
        seedgen.save_lstm(bundle.lstm, out / LSTM_FILE)


def load_bundle(bundle_dir) -> ModelBundle:
    src = Path(bundle_dir)
    try:
        payload = json.loads((src / CONFIG_FILE).read_text(encoding="utf-8"))
        config = RunConfig(**payload["config"])
    except FileNotFoundError:
        raise ModelFormatError(f"{src}: missing {CONFIG_FILE}")
    expected = payload.get("config_hash")
    if config.config_hash() != expected:
        raise ModelFormatError(
            f"{src}: config hash mismatch ({config.config_hash()} != {expected})"
        )
    crf_joint = crf.load_model(src / CRF_JOINT_FILE)
    crf_type = crf.load_model(src / CRF_TYPE_FILE)
    for name, model in ((CRF_JOINT_FILE, crf_joint), (CRF_TYPE_FILE, crf_type)):
        got = model.meta.get("config_hash")
        if got != expected:
            raise ModelFormatError(
                f"{src / name}: config hash {got} does not match bundle {expected}"
            )
    scorer = align.load_scorer(src / SCORER_FILE)
    space = FeatureSpace.load(src / SPACE_FILE)
    lstm = None
    if (src / LSTM_FILE).exists():
        lstm = seedgen.load_lstm(src / LSTM_FILE)
    return ModelBundle(
        config=config, scorer=scorer, crf_joint=crf_joint, crf_type=crf_type,
        lstm=lstm, space=space,
    )
