import numpy as np
import pytest

from revid.corpus import ClassScheme, DraftPair, ParagraphPair, Revision, RevisionOp
from revid.errors import ModelFormatError
from revid.pipeline import (
    ModelBundle,
    RunConfig,
    label_skeleton_types,
    load_bundle,
    predict_corpus,
    predict_paragraph,
    save_bundle,
    train_bundle,
)
from revid.synth import SynthConfig, generate

from conftest import sent


@pytest.fixture(scope="module")
def small_world():
    drafts, annotations = generate(SynthConfig(essays=8, paragraphs_per_essay=2, seed=5))
    config = RunConfig(scheme=3, seed=21, n_candidates=4, lstm_iterations=20,
                       lstm_hidden=12)
    bundle = train_bundle(drafts, annotations, config)
    return drafts, annotations, config, bundle


def test_bundle_has_all_models(small_world):
    _, _, _, bundle = small_world
    assert bundle.crf_joint.labels != bundle.crf_type.labels
    assert len(bundle.crf_joint.labels) == 9
    assert len(bundle.crf_type.labels) == 3
    assert bundle.lstm is not None
    assert len(bundle.space) > 0


def test_identical_drafts_predict_all_nochange(small_world):
    _, _, _, bundle = small_world
    s = tuple(sent(t) for t in ("the tone holds .", "a reader turns the page ."))
    pair = ParagraphPair("ident", s, s)
    for mode in ("pipeline", "joint-1best", "joint-ncand"):
        prediction = predict_paragraph(bundle, pair, mode)
        assert [
            (r.d1_index, r.d2_index, r.op) for r in prediction.revisions
        ] == [(1, 1, RevisionOp.NOCHANGE), (2, 2, RevisionOp.NOCHANGE)], mode
        assert all(str(r.rev_type) == "Nochange" for r in prediction.revisions)


def test_prediction_modes_cover_both_sides(small_world):
    drafts, _, _, bundle = small_world
    test_pair = drafts[0].paragraph_pairs[0]
    for mode in ("pipeline", "joint-1best", "joint-ncand"):
        prediction = predict_paragraph(bundle, test_pair, mode)
        d1_seen = sorted(
            r.d1_index for r in prediction.revisions if r.d1_index is not None
        )
        d2_seen = sorted(
            r.d2_index for r in prediction.revisions if r.d2_index is not None
        )
        assert d1_seen == list(range(1, test_pair.m + 1))
        assert d2_seen == list(range(1, test_pair.n + 1))
        # no dummy types on adds/deletes
        for r in prediction.revisions:
            if r.op in (RevisionOp.ADD, RevisionOp.DELETE):
                assert str(r.rev_type) != "Nochange"


def test_predictions_deterministic(small_world):
    drafts, _, _, bundle = small_world
    a = predict_corpus(bundle, drafts[:2], "joint-ncand")
    b = predict_corpus(bundle, drafts[:2], "joint-ncand")
    assert {k: v.revisions for k, v in a.items()} == {k: v.revisions for k, v in b.items()}


def test_bundle_save_load_roundtrip(small_world, tmp_path):
    drafts, _, _, bundle = small_world
    save_bundle(bundle, tmp_path / "bundle")
    again = load_bundle(tmp_path / "bundle")
    assert again.config == bundle.config
    a = predict_corpus(bundle, drafts[:1], "joint-ncand")
    b = predict_corpus(again, drafts[:1], "joint-ncand")
    assert {k: v.revisions for k, v in a.items()} == {k: v.revisions for k, v in b.items()}


def test_bundle_hash_mismatch_refused(small_world, tmp_path):
    _, _, _, bundle = small_world
    save_bundle(bundle, tmp_path / "bundle")
    cfg_path = tmp_path / "bundle" / "config.json"
    cfg_path.write_text(cfg_path.read_text().replace('"seed": 21', '"seed": 22'))
    with pytest.raises(ModelFormatError, match="hash"):
        load_bundle(tmp_path / "bundle")


def test_retrain_byte_identical(tmp_path):
    drafts, annotations = generate(SynthConfig(essays=4, paragraphs_per_essay=1, seed=2))
    config = RunConfig(scheme=3, seed=3, lstm_iterations=5, lstm_hidden=8)
    for name in ("one", "two"):
        bundle = train_bundle(drafts, annotations, config)
        save_bundle(bundle, tmp_path / name)
    for fname in ("align_scorer.txt", "crf_joint.txt", "crf_type.txt",
                  "lstm.txt", "feature_space.tsv", "config.json"):
        a = (tmp_path / "one" / fname).read_bytes()
        b = (tmp_path / "two" / fname).read_bytes()
        assert a == b, fname


def test_one_best_mode_skips_lstm():
    drafts, annotations = generate(SynthConfig(essays=3, paragraphs_per_essay=1, seed=4))
    config = RunConfig(scheme=3, seed=5, seed_mode="one-best", lstm_iterations=5)
    bundle = train_bundle(drafts, annotations, config)
    assert bundle.lstm is None
    pair = drafts[0].paragraph_pairs[0]
    assert predict_paragraph(bundle, pair, "joint-1best").revisions
    with pytest.raises(ModelFormatError, match="LSTM"):
        predict_paragraph(bundle, pair, "joint-ncand")


def test_label_skeleton_types_masks_nochange(small_world, fig2_pair):
    _, _, _, bundle = small_world
    from revid.align import Alignment
    from revid.seedgen import one_best_seed

    skeleton = one_best_seed(fig2_pair, Alignment(frozenset({(1, 1)}), 3, 3))
    revisions = label_skeleton_types(bundle, fig2_pair, skeleton)
    for r in revisions:
        if r.op in (RevisionOp.ADD, RevisionOp.DELETE):
            assert str(r.rev_type) != "Nochange"
