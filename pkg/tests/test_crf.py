import itertools
import math

import numpy as np
import pytest
from scipy import sparse

from revid.corpus import ClassScheme
from revid.crf import (
    CrfModel,
    DUMMY_LABELS,
    _objective,
    dummy_mask,
    joint_alphabet,
    label,
    load_model,
    save_model,
    sequence_loglik,
    train,
    type_alphabet,
)
from revid.editseq import EditSequence, EditOp
from revid.errors import TrainingError
from revid.features import FeatureConfig, FeatureSpace, ParagraphFeatures

from conftest import random_instance


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def brute_force_scores(E, T):
    """Score every labeling exhaustively; returns (best path, best score,
    log partition function) computed with plain python sums."""
    n_steps, K = E.shape
    best_path, best_score = None, -math.inf
    total = 0.0
    for labeling in itertools.product(range(K), repeat=n_steps):
        s = sum(E[t, k] for t, k in enumerate(labeling))
        s += sum(T[a, b] for a, b in zip(labeling, labeling[1:]))
        if s > best_score:
            best_score, best_path = s, labeling
        total += math.exp(s)
    return best_path, best_score, math.log(total)


def brute_force_marginals(E, T):
    n_steps, K = E.shape
    _, _, logz = brute_force_scores(E, T)
    marg = np.zeros((n_steps, K))
    for labeling in itertools.product(range(K), repeat=n_steps):
        s = sum(E[t, k] for t, k in enumerate(labeling))
        s += sum(T[a, b] for a, b in zip(labeling, labeling[1:]))
        p = math.exp(s - logz)
        for t, k in enumerate(labeling):
            marg[t, k] += p
    return marg


def toy_model(F=5, K=4, seed=0, l2=1.0):
    rng = np.random.default_rng(seed)
    space = FeatureSpace([f"f{i}" for i in range(F)])
    return CrfModel(
        labels=tuple(f"L{k}" for k in range(K)),
        space=space,
        emission=rng.normal(size=(F, K)),
        transition=rng.normal(size=(K, K)),
        l2=l2,
    )


def random_design(rng, n_steps, F, density=0.6):
    X = sparse.random(
        n_steps, F, density=density, random_state=np.random.RandomState(int(rng.integers(1 << 30))),
        data_rvs=lambda size: np.random.RandomState(7).uniform(0.5, 2.0, size),
    )
    return sparse.csr_matrix(X)


# ---------------------------------------------------------------------------
# Alphabets
# ---------------------------------------------------------------------------


def test_alphabet_sizes():
    assert len(joint_alphabet(ClassScheme.THREE)) == 9
    assert len(joint_alphabet(ClassScheme.FOUR)) == 12
    assert len(joint_alphabet(ClassScheme.SIX)) == 18
    assert len(type_alphabet(ClassScheme.THREE)) == 3


def test_alphabet_contains_dummies():
    labels = joint_alphabet(ClassScheme.THREE)
    for d in DUMMY_LABELS:
        assert d in labels


# ---------------------------------------------------------------------------
# Numerics vs oracles
# ---------------------------------------------------------------------------


def test_viterbi_matches_exhaustive():
    rng = np.random.default_rng(1)
    for trial in range(25):
        K = int(rng.integers(2, 7))
        n_steps = int(rng.integers(1, 5))
        if K ** n_steps > 10_000:
            continue
        model = toy_model(F=4, K=K, seed=trial)
        X = random_design(rng, n_steps, 4)
        E = model.lattice(X)
        got = model.decode_lattice(E)
        want_path, want_score, logz = brute_force_scores(E, model.transition)
        got_idx = tuple(model.label_index[lab] for lab in got.labels)
        assert got_idx == want_path
        assert got.seq_loglik == pytest.approx(want_score - logz, rel=1e-10)


def test_marginals_sum_to_one_and_match_oracle():
    rng = np.random.default_rng(2)
    for trial in range(10):
        K = int(rng.integers(2, 6))
        n_steps = int(rng.integers(1, 5))
        model = toy_model(F=3, K=K, seed=100 + trial)
        X = random_design(rng, n_steps, 3)
        marg = model.marginals(X)
        assert np.abs(marg.sum(axis=1) - 1.0).max() < 1e-9
        want = brute_force_marginals(model.lattice(X), model.transition)
        assert np.abs(marg - want).max() < 1e-8


def test_sequence_loglik_matches_oracle():
    rng = np.random.default_rng(3)
    model = toy_model(F=4, K=3, seed=9)
    X = random_design(rng, 4, 4)
    E = model.lattice(X)
    _, _, logz = brute_force_scores(E, model.transition)
    for labeling in itertools.product(model.labels, repeat=4):
        brute = sum(E[t, model.label_index[k]] for t, k in enumerate(labeling))
        brute += sum(
            model.transition[model.label_index[a], model.label_index[b]]
            for a, b in zip(labeling, labeling[1:])
        )
        got = sequence_loglik(model, labeling, X)
        assert got == pytest.approx(brute - logz, rel=1e-9, abs=1e-9)


def test_zero_weight_model_is_uniform():
    space = FeatureSpace(["f0", "f1"])
    K = 5
    model = CrfModel(
        labels=tuple(f"L{k}" for k in range(K)),
        space=space,
        emission=np.zeros((2, K)),
        transition=np.zeros((K, K)),
    )
    X = sparse.csr_matrix(np.ones((4, 2)))
    marg = model.marginals(X)
    assert np.abs(marg - 1.0 / K).max() < 1e-12
    labeling = model.decode_lattice(model.lattice(X))
    assert labeling.seq_loglik == pytest.approx(-4 * math.log(K))


def test_viterbi_loglik_dominates_other_labelings():
    rng = np.random.default_rng(4)
    model = toy_model(F=4, K=3, seed=21)
    X = random_design(rng, 3, 4)
    best = model.decode_lattice(model.lattice(X))
    for labeling in itertools.product(model.labels, repeat=3):
        assert best.seq_loglik >= sequence_loglik(model, labeling, X) - 1e-12


def test_training_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    for trial in range(6):
        K = int(rng.integers(2, 5))
        F = int(rng.integers(2, 5))
        seqs = []
        for _ in range(int(rng.integers(1, 3))):
            n_steps = int(rng.integers(1, 4))
            X = random_design(rng, n_steps, F)
            y = rng.integers(0, K, size=n_steps).astype(np.int64)
            seqs.append((X, y))
        theta = rng.normal(scale=0.5, size=F * K + K * K)
        _, grad = _objective(theta, seqs, F, K, 1.0)
        eps = 1e-6
        for k in rng.choice(len(theta), size=min(8, len(theta)), replace=False):
            up, down = theta.copy(), theta.copy()
            up[k] += eps
            down[k] -= eps
            fd = (
                _objective(up, seqs, F, K, 1.0)[0]
                - _objective(down, seqs, F, K, 1.0)[0]
            ) / (2 * eps)
            denom = max(abs(fd), abs(grad[k]), 1e-8)
            assert abs(fd - grad[k]) / denom < 1e-5


def test_training_memorizes_one_hot_sequence():
    # one-hot indicative features per label: the model must decode its own
    # training sequence exactly
    K = 4
    space = FeatureSpace([f"ind{k}" for k in range(K)])
    y = np.array([0, 1, 2, 3, 1], dtype=np.int64)
    X = sparse.csr_matrix(np.eye(K)[y])
    model = train([(X, y)], [f"L{k}" for k in range(K)], space, l2=0.1)
    got = model.decode_lattice(model.lattice(X))
    assert tuple(model.label_index[lab] for lab in got.labels) == tuple(y)


def test_training_loss_decreases_monotonically():
    rng = np.random.default_rng(6)
    space = FeatureSpace([f"f{i}" for i in range(4)])
    seqs = []
    for _ in range(5):
        n_steps = int(rng.integers(2, 5))
        X = random_design(rng, n_steps, 4)
        y = rng.integers(0, 3, size=n_steps).astype(np.int64)
        seqs.append((X, y))
    model = train(seqs, ["A", "B", "C"], space, l2=1.0)
    losses = model.history
    assert len(losses) >= 2
    assert all(b <= a + 1e-8 for a, b in zip(losses, losses[1:]))


def test_training_validates_inputs():
    space = FeatureSpace(["f0"])
    with pytest.raises(TrainingError):
        train([], ["A"], space)
    X = sparse.csr_matrix(np.ones((2, 1)))
    with pytest.raises(TrainingError):
        train([(X, np.array([0, 5], dtype=np.int64))], ["A", "B"], space)


def test_dummy_mask_blocks_dummy_labels():
    labels = joint_alphabet(ClassScheme.THREE)
    mask = dummy_mask(labels, 3)
    for k, lab in enumerate(labels):
        assert mask[:, k].all() != (lab in DUMMY_LABELS)


def test_label_respects_mask(fig2_pair):
    scheme = ClassScheme.THREE
    labels = joint_alphabet(scheme)
    config = FeatureConfig()
    feats = ParagraphFeatures(fig2_pair, config)
    vectors = [feats.at(i, j) for i in (1, 2) for j in (1, 2)]
    space = FeatureSpace.fit(vectors, min_count=1)
    rng = np.random.default_rng(8)
    model = CrfModel(
        labels=labels,
        space=space,
        emission=rng.normal(size=(len(space), len(labels))),
        transition=rng.normal(size=(len(labels), len(labels))),
    )
    seq = EditSequence.from_ops(
        [EditOp.MM, EditOp.KM, EditOp.MK, EditOp.MM], fig2_pair.m, fig2_pair.n
    )
    masked = label(model, seq, feats, mask=dummy_mask(labels, 4))
    assert all(lab not in DUMMY_LABELS for lab in masked.labels)


def test_model_io_roundtrip(tmp_path):
    model = toy_model(F=4, K=3, seed=10)
    model.meta = {"kind": "joint", "scheme": "3", "config_hash": "abc123def456"}
    save_model(model, tmp_path / "m.txt")
    again = load_model(tmp_path / "m.txt")
    assert again.labels == model.labels
    assert again.meta == model.meta
    assert np.allclose(again.emission, model.emission)
    assert np.allclose(again.transition, model.transition)
    save_model(again, tmp_path / "m2.txt")
    assert (tmp_path / "m.txt").read_text() == (tmp_path / "m2.txt").read_text()
