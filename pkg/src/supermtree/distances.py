"""Subset distances on sequences and sets, with brute-force oracles.

Time series are ``(length, dim)`` float arrays; elements are compared with
the Euclidean norm. Point sets are sorted arrays of distinct reals.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import _kernels as K
from .space import SubsetSpace

__all__ = [
    "as_series",
    "as_set",
    "windowed_l2",
    "dk",
    "sdk",
    "sdk_bruteforce",
    "shd",
    "shd_bruteforce",
    "hausdorff",
    "range_lower_bound",
    "L2WIN",
    "SDK",
    "SHD",
    "SPACES",
    "get_space",
]


def as_series(values, dim: int | None = None) -> np.ndarray:
    """Coerce to a contiguous ``(length, dim)`` float64 array.

    A 1-d input is read as a scalar series unless ``dim`` says otherwise.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim or 1)
    elif arr.ndim != 2:
        raise ValueError(f"series must be 1-d or 2-d, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected dimensionality {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains non-finite values")
    return np.ascontiguousarray(arr)


def as_set(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError("set contains non-finite values")
    return np.unique(arr)


def _check_dims(s: np.ndarray, t: np.ndarray) -> None:
    if s.shape[1] != t.shape[1]:
        raise ValueError(f"dimension mismatch: {s.shape[1]} vs {t.shape[1]}")


def windowed_l2(s, t) -> float:
    """Smallest Euclidean distance between ``s`` and an equally long window of ``t``."""
    s, t = as_series(s), as_series(t)
    _check_dims(s, t)
    if len(s) == 0:
        return math.inf
    if len(s) > len(t):
        raise ValueError(f"windowed_l2 needs |S| <= |T|, got {len(s)} > {len(t)}")
    return float(K.windowed_l2(s, t))


def dk(s, t) -> float:
    """Discrete Fréchet (dog-keeper) distance."""
    s, t = as_series(s), as_series(t)
    _check_dims(s, t)
    return float(K.dk(s, t))


def sdk(s, t) -> float:
    """Dog-keeper distance from ``s`` to its best-matching window of ``t``, any window length."""
    s, t = as_series(s), as_series(t)
    _check_dims(s, t)
    return float(K.sdk(s, t))


def sdk_bruteforce(s, t) -> float:
    """Enumerate every window ``t[j:j+l]`` and take the smallest ``dk``. O(|T|^2) DPs."""
    s, t = as_series(s), as_series(t)
    _check_dims(s, t)
    if len(s) == 0 or len(t) == 0:
        return math.inf
    best = math.inf
    for j in range(len(t)):
        for end in range(j + 1, len(t) + 1):
            best = min(best, float(K.dk(s, t[j:end])))
    return best


def shd(a, b) -> float:
    """Directed Hausdorff distance: how far ``a`` is from lying inside ``b``."""
    return float(K.shd(as_set(a), as_set(b)))


def shd_bruteforce(a, b) -> float:
    return float(K.shd_pairs(as_set(a), as_set(b)))


def hausdorff(a, b) -> float:
    a, b = as_set(a), as_set(b)
    if len(a) == 0 or len(b) == 0:
        return math.inf
    return max(float(K.shd(a, b)), float(K.shd(b, a)))


def range_lower_bound(s, t) -> float:
    """Gap between the value ranges of two scalar series; 0 for ``dim > 1``.

    Every element of ``s`` is at least this far from every element of ``t``,
    so the bound holds for the windowed, dog-keeper and set distances alike.
    """
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    if s.size == 0 or t.size == 0:
        return 0.0
    if s.ndim == 2 and s.shape[1] != 1:
        return 0.0
    return float(max(0.0, s.min() - t.max(), t.min() - s.max()))


def _pack(objs: Sequence[np.ndarray]):
    offsets = np.zeros(len(objs) + 1, dtype=np.int64)
    np.cumsum([len(o) for o in objs], out=offsets[1:])
    return np.concatenate(objs), offsets


def _batched(kernel_m2o, kernel_o2m):
    def many_to_one(xs, y):
        flat, offsets = _pack(xs)
        return kernel_m2o(flat, offsets, y)

    def one_to_many(x, ys):
        flat, offsets = _pack(ys)
        return kernel_o2m(x, flat, offsets)

    return many_to_one, one_to_many


def _raw(kernel):
    return lambda x, y: float(kernel(x, y))


def _make_space(name, kind, kernel, m2o, o2m):
    many_to_one, one_to_many = _batched(m2o, o2m)
    return SubsetSpace(
        name=name,
        size=len,
        distance=_raw(kernel),
        many_to_one_fn=many_to_one,
        one_to_many_fn=one_to_many,
        lower_bound=range_lower_bound,
        kind=kind,
    )


# Spaces operate on already-validated arrays (``as_series`` / ``as_set``).
L2WIN = _make_space("l2win", "series", K.windowed_l2, K.windowed_l2_many_to_one, K.windowed_l2_one_to_many)
SDK = _make_space("sdk", "series", K.sdk, K.sdk_many_to_one, K.sdk_one_to_many)
SHD = _make_space("shd", "set", K.shd, K.shd_many_to_one, K.shd_one_to_many)

SPACES = {space.name: space for space in (L2WIN, SDK, SHD)}


def get_space(name: str) -> SubsetSpace:
    try:
        return SPACES[name]
    except KeyError:
        raise ValueError(f"unknown distance {name!r}; choose from {sorted(SPACES)}") from None
