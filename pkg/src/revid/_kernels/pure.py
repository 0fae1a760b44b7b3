"""Pure-numpy implementations of the hot kernels.

Mirror of the Cython module `_speedups`; the package falls back to this
module when the extension is not built.  All lattice functions take a dense
emission-score matrix ``emit`` of shape (T, K) and a transition matrix
``trans`` of shape (K, K), both float64, and work in log space.
"""

from __future__ import annotations

import numpy as np


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=-1, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True)))[..., 0]


def log_forward(emit: np.ndarray, trans: np.ndarray):
    """Forward recursion; returns (alphas (T,K), log partition function)."""
    T, K = emit.shape
    alphas = np.empty((T, K))
    alphas[0] = emit[0]
    for t in range(1, T):
        # alphas[t-1][:,None] + trans broadcasts over destination labels
        alphas[t] = emit[t] + _logsumexp_rows((alphas[t - 1][:, None] + trans).T)
    return alphas, float(_logsumexp_rows(alphas[-1][None])[0])


def log_backward(emit: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Backward recursion; betas[t, k] = log sum over completions from (t, k)."""
    T, K = emit.shape
    betas = np.zeros((T, K))
    for t in range(T - 2, -1, -1):
        betas[t] = _logsumexp_rows(trans + (emit[t + 1] + betas[t + 1])[None, :])
    return betas


def viterbi(emit: np.ndarray, trans: np.ndarray):
    """Best labeling; returns (path int64 (T,), path score)."""
    T, K = emit.shape
    score = emit[0].copy()
    back = np.zeros((T, K), dtype=np.int64)
    for t in range(1, T):
        cand = score[:, None] + trans  # (from, to)
        back[t] = cand.argmax(axis=0)
        score = cand.max(axis=0) + emit[t]
    path = np.empty(T, dtype=np.int64)
    path[-1] = int(score.argmax())
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, float(score[path[-1]])


def transition_expectations(
    emit: np.ndarray,
    trans: np.ndarray,
    alphas: np.ndarray,
    betas: np.ndarray,
    logz: float,
) -> np.ndarray:
    """Expected transition counts E[#(k -> k')] under the posterior."""
    T, K = emit.shape
    out = np.zeros((K, K))
    for t in range(1, T):
        out += np.exp(
            alphas[t - 1][:, None] + trans + (emit[t] + betas[t])[None, :] - logz
        )
    return out


def levenshtein_ids(a: np.ndarray, b: np.ndarray) -> int:
    """Unit-cost edit distance between two int32 id sequences."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = np.arange(lb + 1, dtype=np.int64)
    cur = np.empty(lb + 1, dtype=np.int64)
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return int(prev[lb])
