"""Seed candidate EditSequences for the mutation search.

Two sources: the 1-best transformation of a predicted sentence alignment,
and sampling from a single-layer LSTM that predicts the label distribution
of the next EditStep from features at the current cursor positions.  Seeds
carry only an op-skeleton; every type is the dummy Nochange placeholder that
CRF labeling replaces.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .align import Alignment
from .corpus import ParagraphPair
from .crf import label_op
from .editseq import EditOp, EditSequence
from .errors import ModelFormatError, TrainingError
from .features import FeatureSpace, ParagraphFeatures

ONE_BEST = "OneBest"
SAMPLED = "Sampled"


def one_best_seed(pair: ParagraphPair, alignment: Alignment) -> EditSequence:
    """Encode an alignment as a dummy-typed EditSequence: aligned pairs
    become M-M, unaligned D2 sentences K-M, unaligned D1 sentences M-K,
    with K-M preceding M-K inside each gap (canonical order)."""
    ops: list[EditOp] = []
    pi, pj = 0, 0
    for i, j in sorted(alignment.pairs):
        ops.extend([EditOp.KM] * (j - pj - 1))
        ops.extend([EditOp.MK] * (i - pi - 1))
        ops.append(EditOp.MM)
        pi, pj = i, j
    ops.extend([EditOp.KM] * (alignment.n - pj))
    ops.extend([EditOp.MK] * (alignment.m - pi))
    return EditSequence.from_ops(ops, alignment.m, alignment.n)


@dataclass
class SeedSet:
    """Distinct candidate sequences tagged with their provenance."""

    candidates: tuple[tuple[EditSequence, str], ...]
    complete: bool = True

    @classmethod
    def build(
        cls, items: Iterable[tuple[EditSequence, str]], complete: bool = True
    ) -> "SeedSet":
        seen: set[tuple[EditOp, ...]] = set()
        kept = []
        for seq, tag in items:
            key = seq.ops
            if key not in seen:
                seen.add(key)
                kept.append((seq, tag))
        return cls(candidates=tuple(kept), complete=complete)

    def sequences(self) -> list[EditSequence]:
        return [seq for seq, _ in self.candidates]


# ---------------------------------------------------------------------------
# LSTM sequence generator
# ---------------------------------------------------------------------------


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


@dataclass
class LstmModel:
    """One LSTM layer plus a softmax output over the label alphabet.

    Gate layout along the 4H axis: input, forget, output, candidate.
    """

    labels: tuple[str, ...]
    space: FeatureSpace
    hidden: int
    Wx: np.ndarray  # (F, 4H)
    Wh: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)
    Wy: np.ndarray  # (H, L)
    by: np.ndarray  # (L,)
    train_losses: list = field(default_factory=list)

    @classmethod
    def init(
        cls, labels: Sequence[str], space: FeatureSpace, hidden: int = 100,
        seed: int = 0, scale: float = 0.01,
    ) -> "LstmModel":
        rng = np.random.default_rng(seed)
        F, H, L = len(space), hidden, len(labels)
        def u(*shape):
            return rng.uniform(-scale, scale, size=shape)
        b = u(4 * H)
        b[H : 2 * H] += 1.0  # forget-gate bias starts open
        return cls(
            labels=tuple(labels), space=space, hidden=hidden,
            Wx=u(F, 4 * H), Wh=u(H, 4 * H), b=b, Wy=u(H, L), by=u(L),
        )

    def params(self) -> dict[str, np.ndarray]:
        return {"Wx": self.Wx, "Wh": self.Wh, "b": self.b, "Wy": self.Wy, "by": self.by}

    def step(self, xw: np.ndarray, h: np.ndarray, c: np.ndarray):
        """One recurrence; xw is the input projection x @ Wx."""
        H = self.hidden
        a = xw + h @ self.Wh + self.b
        i = _sigmoid(a[:H])
        f = _sigmoid(a[H : 2 * H])
        o = _sigmoid(a[2 * H : 3 * H])
        g = np.tanh(a[3 * H :])
        c_new = f * c + i * g
        hc = np.tanh(c_new)
        h_new = o * hc
        probs = _softmax(h_new @ self.Wy + self.by)
        cache = (i, f, o, g, c, c_new, hc, h, probs)
        return h_new, c_new, probs, cache

    def forward(self, X: sparse.csr_matrix):
        """Run the whole sequence; returns per-step probs and caches."""
        T = X.shape[0]
        XW = np.asarray(X @ self.Wx)
        h = np.zeros(self.hidden)
        c = np.zeros(self.hidden)
        probs, caches, hs = [], [], []
        for t in range(T):
            h, c, p, cache = self.step(XW[t], h, c)
            probs.append(p)
            caches.append(cache)
            hs.append(h)
        return np.array(probs), caches, hs


def lstm_loss_and_grads(model: LstmModel, X: sparse.csr_matrix, y: np.ndarray):
    """Mean cross-entropy of the gold labels plus full BPTT gradients."""
    T = X.shape[0]
    H = model.hidden
    probs, caches, hs = model.forward(X)
    t_idx = np.arange(T)
    loss = float(-np.log(probs[t_idx, y] + 1e-300).mean())

    grads = {k: np.zeros_like(v) for k, v in model.params().items()}
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    Xc = X.tocsr()
    for t in range(T - 1, -1, -1):
        i, f, o, g, c_prev, c_new, hc, h_prev, p = caches[t]
        dlogits = p.copy()
        dlogits[y[t]] -= 1.0
        dlogits /= T
        grads["Wy"] += np.outer(hs[t], dlogits)
        grads["by"] += dlogits
        dh = model.Wy @ dlogits + dh_next
        do = dh * hc
        dc = dh * o * (1.0 - hc * hc) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f
        da = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g * g),
        ])
        grads["b"] += da
        grads["Wh"] += np.outer(h_prev, da)
        dh_next = model.Wh @ da
        row = Xc.getrow(t)
        for col, val in zip(row.indices, row.data):
            grads["Wx"][col] += val * da
    return loss, grads


def train_lstm(
    sequences: list[tuple[sparse.csr_matrix, np.ndarray]],
    labels: Sequence[str],
    space: FeatureSpace,
    hidden: int = 100,
    epochs: int = 1,
    iterations: int = 100,
    lr: float = 0.1,
    clip: float = 5.0,
    seed: int = 0,
) -> LstmModel:
    """Adagrad training; one iteration is one full pass over one training
    sequence, taken round-robin."""
    if not sequences:
        raise TrainingError("no LSTM training sequences")
    model = LstmModel.init(labels, space, hidden=hidden, seed=seed)
    accum = {k: np.zeros_like(v) for k, v in model.params().items()}
    params = model.params()
    total = epochs * iterations
    for it in range(total):
        X, y = sequences[it % len(sequences)]
        loss, grads = lstm_loss_and_grads(model, X, y)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite LSTM loss at iteration {it}")
        model.train_losses.append(loss)
        for k, g in grads.items():
            np.clip(g, -clip, clip, out=g)
            accum[k] += g * g
            params[k] -= lr * g / (np.sqrt(accum[k]) + 1e-8)
    return model


def _op_mask(labels: Sequence[str], i: int, j: int, m: int, n: int) -> np.ndarray:
    """Labels whose op would push a cursor past its side's end are invalid."""
    mask = np.zeros(len(labels), dtype=bool)
    for k, lab in enumerate(labels):
        op = label_op(lab)
        mask[k] = (not op.moves_d1 or i <= m) and (not op.moves_d2 or j <= n)
    return mask


def sample_candidates(
    model: LstmModel,
    pair: ParagraphPair,
    features: ParagraphFeatures,
    count: int = 10,
    rng: Optional[np.random.Generator] = None,
    attempts_factor: int = 20,
) -> SeedSet:
    """Sample distinct valid op-skeletons from the LSTM.

    At each step the label distribution is masked to cursor-feasible ops and
    renormalized; the sampled op advances the cursors, so every emitted
    candidate satisfies cursor closure by construction.  Returns fewer than
    ``count`` candidates (``complete=False``) only when the attempt cap
    ``attempts_factor * count`` is exhausted.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    m, n = pair.m, pair.n
    out: list[tuple[EditSequence, str]] = []
    seen: set[tuple[EditOp, ...]] = set()
    attempts = 0
    while len(out) < count and attempts < attempts_factor * count:
        attempts += 1
        ops: list[EditOp] = []
        h = np.zeros(model.hidden)
        c = np.zeros(model.hidden)
        i, j = 1, 1
        while i <= m or j <= n:
            x = model.space.matrix([features.at(i, j)])
            xw = np.asarray(x @ model.Wx)[0]
            h, c, probs, _ = model.step(xw, h, c)
            mask = _op_mask(model.labels, i, j, m, n)
            masked = np.where(mask, probs, 0.0)
            renorm = masked / masked.sum()
            k = int(np.searchsorted(np.cumsum(renorm), rng.random(), side="right"))
            k = min(k, len(model.labels) - 1)
            op = label_op(model.labels[k])
            ops.append(op)
            i += op.moves_d1
            j += op.moves_d2
        key = tuple(ops)
        if key not in seen:
            seen.add(key)
            out.append((EditSequence.from_ops(ops, m, n), SAMPLED))
    return SeedSet.build(out, complete=len(out) >= count)


# ---------------------------------------------------------------------------
# Model file (versioned text with base64 parameter blocks)
# ---------------------------------------------------------------------------

_MAGIC = "revid-lstm\tv1"


def save_lstm(model: LstmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"hidden\t{model.hidden}\n")
        fh.write("labels\t" + ",".join(model.labels) + "\n")
        # feature names may contain commas (punctuation tokens); tab-join them
        fh.write("features\t" + "\t".join(model.space.names) + "\n")
        for name, arr in model.params().items():
            shape = "x".join(str(s) for s in arr.shape)
            fh.write(f"param\t{name}\t{shape}\n")
            fh.write(base64.encodebytes(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).decode("ascii"))


def load_lstm(path) -> LstmModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ModelFormatError(f"{path}: not a revid-lstm v1 model file")
    hidden = None
    labels: tuple[str, ...] = ()
    names: tuple[str, ...] = ()
    params: dict[str, np.ndarray] = {}
    idx = 1
    while idx < len(lines):
        line = lines[idx]
        idx += 1
        if not line:
            continue
        parts = line.split("\t")
        if parts[0] == "hidden":
            hidden = int(parts[1])
        elif parts[0] == "labels":
            labels = tuple(parts[1].split(","))
        elif parts[0] == "features":
            names = tuple(parts[1:]) if len(parts) > 1 else ()
        elif parts[0] == "param":
            name = parts[1]
            shape = tuple(int(s) for s in parts[2].split("x"))
            blob_lines = []
            while idx < len(lines) and lines[idx] and "\t" not in lines[idx]:
                blob_lines.append(lines[idx])
                idx += 1
            raw = base64.b64decode("".join(blob_lines))
            params[name] = np.frombuffer(raw, dtype=np.float64).reshape(shape).copy()
        else:
            raise ModelFormatError(f"{path}: unknown record {parts[0]!r}")
    missing = {"Wx", "Wh", "b", "Wy", "by"} - set(params)
    if hidden is None or not labels or missing:
        raise ModelFormatError(f"{path}: incomplete model file (missing {missing})")
    return LstmModel(
        labels=labels, space=FeatureSpace(names), hidden=hidden,
        Wx=params["Wx"], Wh=params["Wh"], b=params["b"],
        Wy=params["Wy"], by=params["by"],
    )
