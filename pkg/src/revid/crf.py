"""Linear-chain CRF over EditStep labels, written from scratch.

The model scores a labeling y of a T-step sequence as
``sum_t x_t . W[:, y_t] + sum_t Tr[y_{t-1}, y_t]`` and normalizes over all
|alphabet|^T labelings via the forward recursion in log space.  Training
maximizes the L2-penalized conditional log-likelihood with L-BFGS; the
gradient is gold feature counts minus posterior expectations from
forward-backward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, sparse

from . import _kernels
from .corpus import ClassScheme
from .editseq import EditOp, EditSequence
from .errors import ModelFormatError, TrainingError
from .features import FeatureSpace, ParagraphFeatures

NEG_INF = -1e30  # masked-label score; keeps log-space arithmetic finite

DUMMY_LABELS = ("K-M-Nochange", "M-K-Nochange")


def joint_alphabet(scheme: ClassScheme) -> tuple[str, ...]:
    """All op-type labels: 3 x RevisionClassNum, dummies included."""
    return tuple(
        f"{op.value}-{cls}" for op in (EditOp.MM, EditOp.KM, EditOp.MK)
        for cls in scheme.classes
    )


def type_alphabet(scheme: ClassScheme) -> tuple[str, ...]:
    """Type-only labels used by the pipeline baseline."""
    return scheme.classes


def label_op(label: str) -> EditOp:
    return EditOp(label[:3])


def label_type(label: str) -> str:
    return label[4:]


@dataclass
class LabeledSequence:
    """A labeling plus its per-step and whole-sequence likelihoods."""

    labels: tuple[str, ...]
    step_likelihoods: np.ndarray  # posterior marginal of each assigned label
    seq_loglik: float  # log P(labels | features)

    @property
    def normalized_loglik(self) -> float:
        return self.seq_loglik / max(len(self.labels), 1)

    def comparable_loglik(self, normalization: str = "normalized") -> float:
        if normalization == "raw":
            return self.seq_loglik
        return self.normalized_loglik


@dataclass
class CrfModel:
    labels: tuple[str, ...]
    space: FeatureSpace
    emission: np.ndarray  # (F, K)
    transition: np.ndarray  # (K, K)
    l2: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.label_index = {lab: k for k, lab in enumerate(self.labels)}
        if self.emission.shape != (len(self.space), len(self.labels)):
            raise ValueError("emission weight shape disagrees with space/alphabet")
        if self.transition.shape != (len(self.labels), len(self.labels)):
            raise ValueError("transition weight shape disagrees with alphabet")

    # -- scoring ------------------------------------------------------------

    def emissions(self, X: sparse.csr_matrix) -> np.ndarray:
        return np.ascontiguousarray(X @ self.emission)

    def lattice(self, X, mask: Optional[np.ndarray] = None) -> np.ndarray:
        E = self.emissions(X)
        if mask is not None:
            if mask.shape != E.shape:
                raise ValueError("mask shape must be (steps, labels)")
            E = np.where(mask, E, NEG_INF)
        return np.ascontiguousarray(E)

    def decode_lattice(self, E: np.ndarray) -> LabeledSequence:
        trans = np.ascontiguousarray(self.transition)
        path, _ = _kernels.viterbi(E, trans)
        alphas, logz = _kernels.log_forward(E, trans)
        betas = _kernels.log_backward(E, trans)
        marg = np.exp(alphas + betas - logz)
        t_idx = np.arange(len(path))
        score = float(E[t_idx, path].sum() + trans[path[:-1], path[1:]].sum())
        return LabeledSequence(
            labels=tuple(self.labels[k] for k in path),
            step_likelihoods=marg[t_idx, path],
            seq_loglik=score - logz,
        )

    def marginals(self, X, mask=None) -> np.ndarray:
        """Posterior label marginals per step; rows sum to 1."""
        E = self.lattice(X, mask)
        trans = np.ascontiguousarray(self.transition)
        alphas, logz = _kernels.log_forward(E, trans)
        betas = _kernels.log_backward(E, trans)
        return np.exp(alphas + betas - logz)


def dummy_mask(labels: Sequence[str], n_steps: int) -> np.ndarray:
    """Mask forbidding the placeholder K-M-/M-K-Nochange labels everywhere."""
    mask = np.ones((n_steps, len(labels)), dtype=bool)
    for k, lab in enumerate(labels):
        if lab in DUMMY_LABELS:
            mask[:, k] = False
    return mask


def label(
    model: CrfModel,
    candidate: EditSequence,
    features: ParagraphFeatures,
    mask: Optional[np.ndarray] = None,
) -> LabeledSequence:
    """Viterbi-label a candidate sequence over the model's full alphabet.

    The candidate's op-skeleton only fixes the cursor positions that features
    are extracted at; the model is free to predict op-parts disagreeing with
    the candidate (the collision signal for the mutation search).
    """
    X = model.space.matrix(features.for_sequence(candidate))
    return model.decode_lattice(model.lattice(X, mask))


def sequence_loglik(model: CrfModel, labels: Sequence[str], X) -> float:
    """log P(labels | features) = score(labels) - log Z."""
    try:
        y = np.array([model.label_index[lab] for lab in labels], dtype=np.int64)
    except KeyError as exc:
        raise ModelFormatError(f"label {exc} not in the model alphabet") from None
    E = model.lattice(X)
    trans = np.ascontiguousarray(model.transition)
    _, logz = _kernels.log_forward(E, trans)
    t_idx = np.arange(len(y))
    score = float(E[t_idx, y].sum() + trans[y[:-1], y[1:]].sum())
    return score - logz


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _objective(theta, sequences, F, K, l2):
    W = theta[: F * K].reshape(F, K)
    Tr = np.ascontiguousarray(theta[F * K :].reshape(K, K))
    ll = 0.0
    gW = np.zeros((F, K))
    gT = np.zeros((K, K))
    for X, y in sequences:
        E = np.ascontiguousarray(X @ W)
        alphas, logz = _kernels.log_forward(E, Tr)
        betas = _kernels.log_backward(E, Tr)
        t_idx = np.arange(len(y))
        ll += float(E[t_idx, y].sum() + Tr[y[:-1], y[1:]].sum()) - logz
        resid = -np.exp(alphas + betas - logz)
        resid[t_idx, y] += 1.0
        gW += X.T @ resid
        gT -= _kernels.transition_expectations(E, Tr, alphas, betas, logz)
        np.add.at(gT, (y[:-1], y[1:]), 1.0)
    ll -= 0.5 * l2 * (float((W ** 2).sum()) + float((Tr ** 2).sum()))
    gW -= l2 * W
    gT -= l2 * Tr
    grad = np.concatenate([gW.ravel(), gT.ravel()])
    return -ll, -grad


def train(
    sequences: list[tuple[sparse.csr_matrix, np.ndarray]],
    labels: Sequence[str],
    space: FeatureSpace,
    l2: float = 1.0,
    gtol: float = 1e-4,
    max_iter: int = 200,
    meta: Optional[dict] = None,
) -> CrfModel:
    """Fit emission and transition weights on (design matrix, gold label
    indices) pairs by maximizing the penalized conditional log-likelihood."""
    if not sequences:
        raise TrainingError("no training sequences")
    F, K = len(space), len(labels)
    for X, y in sequences:
        if X.shape != (len(y), F):
            raise TrainingError(
                f"design matrix shape {X.shape} disagrees with {len(y)} steps, {F} features"
            )
        if len(y) == 0:
            raise TrainingError("empty training sequence")
        if y.min() < 0 or y.max() >= K:
            raise TrainingError("gold label index outside the alphabet")

    history: list[float] = []
    last_eval: dict = {}

    def fun(theta):
        value, grad = _objective(theta, sequences, F, K, l2)
        if not (np.isfinite(value) and np.isfinite(grad).all()):
            raise TrainingError(
                f"non-finite objective after {len(history)} iterations: value={value}"
            )
        last_eval["key"] = theta.tobytes()
        last_eval["value"] = value
        return value, grad

    def on_iter(theta):
        # the accepted iterate was just evaluated by the line search
        if last_eval.get("key") == theta.tobytes():
            history.append(last_eval["value"])
        else:
            history.append(float(_objective(theta, sequences, F, K, l2)[0]))

    result = optimize.minimize(
        fun,
        np.zeros(F * K + K * K),
        jac=True,
        method="L-BFGS-B",
        callback=on_iter,
        options={"maxiter": max_iter, "gtol": gtol, "maxcor": 20},
    )
    theta = result.x
    if not np.isfinite(theta).all():
        raise TrainingError(f"optimizer returned non-finite weights: {result.message}")
    model = CrfModel(
        labels=tuple(labels),
        space=space,
        emission=theta[: F * K].reshape(F, K).copy(),
        transition=theta[F * K :].reshape(K, K).copy(),
        l2=l2,
        meta=dict(meta or {}),
    )
    model.history = history
    return model


# ---------------------------------------------------------------------------
# Model file format (versioned text)
# ---------------------------------------------------------------------------

_MAGIC = "revid-crf\tv1"


def save_model(model: CrfModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MAGIC + "\n")
        for key in sorted(model.meta):
            fh.write(f"meta\t{key}\t{model.meta[key]}\n")
        fh.write(f"l2\t{model.l2!r}\n")
        fh.write("labels\t" + ",".join(model.labels) + "\n")
        # feature names may contain commas (punctuation tokens); tab-join them
        fh.write("features\t" + "\t".join(model.space.names) + "\n")
        F, K = model.emission.shape
        for f in range(F):
            for k in range(K):
                w = float(model.emission[f, k])
                if w != 0.0:
                    fh.write(f"E\t{model.space.names[f]}\t{model.labels[k]}\t{w!r}\n")
        for a in range(K):
            for b in range(K):
                w = float(model.transition[a, b])
                if w != 0.0:
                    fh.write(f"T\t{model.labels[a]}\t{model.labels[b]}\t{w!r}\n")


def load_model(path) -> CrfModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ModelFormatError(f"{path}: not a revid-crf v1 model file")
    meta: dict = {}
    l2 = 1.0
    labels: tuple[str, ...] = ()
    names: tuple[str, ...] = ()
    entries_e: list[tuple[str, str, float]] = []
    entries_t: list[tuple[str, str, float]] = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split("\t")
        if parts[0] == "meta":
            meta[parts[1]] = parts[2]
        elif parts[0] == "l2":
            l2 = float(parts[1])
        elif parts[0] == "labels":
            labels = tuple(parts[1].split(","))
        elif parts[0] == "features":
            names = tuple(parts[1:]) if len(parts) > 1 else ()
        elif parts[0] == "E":
            entries_e.append((parts[1], parts[2], float(parts[3])))
        elif parts[0] == "T":
            entries_t.append((parts[1], parts[2], float(parts[3])))
        else:
            raise ModelFormatError(f"{path}: unknown record {parts[0]!r}")
    if not labels:
        raise ModelFormatError(f"{path}: missing labels record")
    space = FeatureSpace(names)
    emission = np.zeros((len(space), len(labels)))
    transition = np.zeros((len(labels), len(labels)))
    lab_idx = {lab: k for k, lab in enumerate(labels)}
    for fname, lab, w in entries_e:
        if fname not in space.index or lab not in lab_idx:
            raise ModelFormatError(f"{path}: E record references unknown {fname!r}/{lab!r}")
        emission[space.index[fname], lab_idx[lab]] = w
    for la, lb, w in entries_t:
        if la not in lab_idx or lb not in lab_idx:
            raise ModelFormatError(f"{path}: T record references unknown label")
        transition[lab_idx[la], lab_idx[lb]] = w
    return CrfModel(
        labels=labels, space=space, emission=emission, transition=transition,
        l2=l2, meta=meta,
    )
