"""Compiled inner loops for the subset distances.

Series are ``(length, dim)`` float64 arrays, sets are sorted 1-d float64
arrays. Batched kernels take a packed collection: all objects concatenated
along axis 0 plus an ``offsets`` array of ``len + 1`` boundaries.
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True, nogil=True)
def _ground(s, i, t, j):
    acc = 0.0
    for k in range(s.shape[1]):
        diff = s[i, k] - t[j, k]
        acc += diff * diff
    return np.sqrt(acc)


@njit(cache=True, nogil=True)
def windowed_l2(s, t):
    m = s.shape[0]
    n = t.shape[0]
    if m == 0:
        return INF
    best = INF
    for j in range(n - m + 1):
        acc = 0.0
        for i in range(m):
            for k in range(s.shape[1]):
                diff = s[i, k] - t[i + j, k]
                acc += diff * diff
            if acc >= best:
                break
        if acc < best:
            best = acc
    return np.sqrt(best)


@njit(cache=True, nogil=True)
def dk(s, t):
    m = s.shape[0]
    n = t.shape[0]
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return INF
    # keep the shorter sequence along the row buffer
    if n > m:
        s, t = t, s
        m, n = n, m
    prev = np.empty(n)
    cur = np.empty(n)
    prev[0] = _ground(s, 0, t, 0)
    for j in range(1, n):
        prev[j] = max(prev[j - 1], _ground(s, 0, t, j))
    for i in range(1, m):
        cur[0] = max(prev[0], _ground(s, i, t, 0))
        for j in range(1, n):
            a = prev[j - 1]
            if cur[j - 1] < a:
                a = cur[j - 1]
            if prev[j] < a:
                a = prev[j]
            c = _ground(s, i, t, j)
            cur[j] = c if c > a else a
        prev, cur = cur, prev
    return prev[n - 1]


@njit(cache=True, nogil=True)
def sdk(s, t):
    m = s.shape[0]
    n = t.shape[0]
    if m == 0 or n == 0:
        return INF
    prev = np.empty(n)
    cur = np.empty(n)
    # free start: any element of t may open the coupling
    for j in range(n):
        prev[j] = _ground(s, 0, t, j)
    for i in range(1, m):
        cur[0] = max(prev[0], _ground(s, i, t, 0))
        for j in range(1, n):
            a = prev[j - 1]
            if cur[j - 1] < a:
                a = cur[j - 1]
            if prev[j] < a:
                a = prev[j]
            c = _ground(s, i, t, j)
            cur[j] = c if c > a else a
        prev, cur = cur, prev
    # free end
    best = INF
    for j in range(n):
        if prev[j] < best:
            best = prev[j]
    return best


@njit(cache=True, nogil=True)
def shd(a, b):
    if a.shape[0] == 0:
        return 0.0
    if b.shape[0] == 0:
        return INF
    nb = b.shape[0]
    worst = 0.0
    for i in range(a.shape[0]):
        x = a[i]
        k = np.searchsorted(b, x)
        best = INF
        if k < nb:
            best = b[k] - x
        if k > 0:
            d = x - b[k - 1]
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst


@njit(cache=True, nogil=True)
def shd_pairs(a, b):
    if a.shape[0] == 0:
        return 0.0
    if b.shape[0] == 0:
        return INF
    worst = 0.0
    for i in range(a.shape[0]):
        best = INF
        for j in range(b.shape[0]):
            d = abs(a[i] - b[j])
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst


# Batched forms. Written out per distance: numba cannot cache closures.


@njit(cache=True, nogil=True)
def windowed_l2_many_to_one(flat, offsets, q):
    out = np.empty(offsets.shape[0] - 1)
    for k in range(out.shape[0]):
        out[k] = windowed_l2(flat[offsets[k]:offsets[k + 1]], q)
    return out


@njit(cache=True, nogil=True)
def windowed_l2_one_to_many(x, flat, offsets):
    out = np.empty(offsets.shape[0] - 1)
    for k in range(out.shape[0]):
        out[k] = windowed_l2(x, flat[offsets[k]:offsets[k + 1]])
    return out


@njit(cache=True, nogil=True)
def sdk_many_to_one(flat, offsets, q):
    out = np.empty(offsets.shape[0] - 1)
    for k in range(out.shape[0]):
        out[k] = sdk(flat[offsets[k]:offsets[k + 1]], q)
    return out


@njit(cache=True, nogil=True)
def sdk_one_to_many(x, flat, offsets):
    out = np.empty(offsets.shape[0] - 1)
    for k in range(out.shape[0]):
        out[k] = sdk(x, flat[offsets[k]:offsets[k + 1]])
    return out


@njit(cache=True, nogil=True)
def shd_many_to_one(flat, offsets, q):
    out = np.empty(offsets.shape[0] - 1)
    for k in range(out.shape[0]):
        out[k] = shd(flat[offsets[k]:offsets[k + 1]], q)
    return out


@njit(cache=True, nogil=True)
def shd_one_to_many(x, flat, offsets):
    out = np.empty(offsets.shape[0] - 1)
    for k in range(out.shape[0]):
        out[k] = shd(x, flat[offsets[k]:offsets[k + 1]])
    return out
