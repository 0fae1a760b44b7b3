# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the hot kernels (see pure.py for the contract)."""

import numpy as np

from libc.math cimport exp, log


cdef double _lse_row(double[:] row, Py_ssize_t k) nogil:
    cdef double m = row[0]
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(1, k):
        if row[i] > m:
            m = row[i]
    for i in range(k):
        s += exp(row[i] - m)
    return m + log(s)


def log_forward(double[:, ::1] emit, double[:, ::1] trans):
    cdef Py_ssize_t T = emit.shape[0]
    cdef Py_ssize_t K = emit.shape[1]
    alphas_arr = np.empty((T, K), dtype=np.float64)
    cdef double[:, ::1] alphas = alphas_arr
    work_arr = np.empty(K, dtype=np.float64)
    cdef double[:] work = work_arr
    cdef Py_ssize_t t, j, i
    for j in range(K):
        alphas[0, j] = emit[0, j]
    for t in range(1, T):
        for j in range(K):
            for i in range(K):
                work[i] = alphas[t - 1, i] + trans[i, j]
            alphas[t, j] = emit[t, j] + _lse_row(work, K)
    cdef double logz = _lse_row(alphas[T - 1], K)
    return alphas_arr, logz


def log_backward(double[:, ::1] emit, double[:, ::1] trans):
    cdef Py_ssize_t T = emit.shape[0]
    cdef Py_ssize_t K = emit.shape[1]
    betas_arr = np.zeros((T, K), dtype=np.float64)
    cdef double[:, ::1] betas = betas_arr
    work_arr = np.empty(K, dtype=np.float64)
    cdef double[:] work = work_arr
    cdef Py_ssize_t t, j, i
    for t in range(T - 2, -1, -1):
        for i in range(K):
            for j in range(K):
                work[j] = trans[i, j] + emit[t + 1, j] + betas[t + 1, j]
            betas[t, i] = _lse_row(work, K)
    return betas_arr


def viterbi(double[:, ::1] emit, double[:, ::1] trans):
    cdef Py_ssize_t T = emit.shape[0]
    cdef Py_ssize_t K = emit.shape[1]
    score_arr = np.array(emit[0], dtype=np.float64, copy=True)
    cdef double[:] score = score_arr
    next_arr = np.empty(K, dtype=np.float64)
    cdef double[:] nxt = next_arr
    back_arr = np.zeros((T, K), dtype=np.int64)
    cdef long long[:, ::1] back = back_arr
    path_arr = np.empty(T, dtype=np.int64)
    cdef long long[:] path = path_arr
    cdef Py_ssize_t t, j, i, best_i
    cdef double best, cand
    for t in range(1, T):
        for j in range(K):
            best = score[0] + trans[0, j]
            best_i = 0
            for i in range(1, K):
                cand = score[i] + trans[i, j]
                if cand > best:
                    best = cand
                    best_i = i
            nxt[j] = best + emit[t, j]
            back[t, j] = best_i
        for j in range(K):
            score[j] = nxt[j]
    best = score[0]
    best_i = 0
    for i in range(1, K):
        if score[i] > best:
            best = score[i]
            best_i = i
    path[T - 1] = best_i
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path_arr, best


def transition_expectations(
    double[:, ::1] emit,
    double[:, ::1] trans,
    double[:, ::1] alphas,
    double[:, ::1] betas,
    double logz,
):
    cdef Py_ssize_t T = emit.shape[0]
    cdef Py_ssize_t K = emit.shape[1]
    out_arr = np.zeros((K, K), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, i, j
    for t in range(1, T):
        for i in range(K):
            for j in range(K):
                out[i, j] += exp(
                    alphas[t - 1, i] + trans[i, j] + emit[t, j] + betas[t, j] - logz
                )
    return out_arr


def levenshtein_ids(int[:] a, int[:] b):
    cdef Py_ssize_t la = a.shape[0]
    cdef Py_ssize_t lb = b.shape[0]
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev_arr = np.arange(lb + 1, dtype=np.int64)
    cur_arr = np.empty(lb + 1, dtype=np.int64)
    cdef long long[:] prev = prev_arr
    cdef long long[:] cur = cur_arr
    cdef long long[:] tmp
    cdef Py_ssize_t i, j
    cdef long long cost, best
    cdef int ai
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if prev[j - 1] + cost < best:
                best = prev[j - 1] + cost
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[lb])
