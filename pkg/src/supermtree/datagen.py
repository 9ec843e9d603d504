"""Synthetic datasets: random sequences and sets, cylinder-bell-funnel, and
random accelerated motion (RAM) trajectories.

Every generator is a pure function of its parameters and seed. Streams are split
with :class:`numpy.random.SeedSequence`: one child stream per record, in
record order, so a record does not depend on how many values its
predecessors consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .records import Record

__all__ = [
    "CBF_TYPES",
    "CbfSpec",
    "CbfParams",
    "RamSpec",
    "RandomSpec",
    "child_rngs",
    "draw_cbf_params",
    "cbf_pattern",
    "cbf_series",
    "cbf_dataset",
    "ram_base",
    "time_distortion",
    "space_distortion",
    "ram_dataset",
    "random_sequences",
    "random_sets",
    "crop",
]

CBF_TYPES = "cbf"


def child_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


# -- random sequences / sets -------------------------------------------------


@dataclass(frozen=True)
class RandomSpec:
    count: int
    min_size: int = 1
    max_size: int = 128
    low: float = 0.0
    high: float = 1.0
    dim: int = 1
    integer: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be nonnegative")
        if not 1 <= self.min_size <= self.max_size:
            raise ValueError(f"bad size range {self.min_size}:{self.max_size}")
        if not self.low < self.high:
            raise ValueError(f"bad value interval [{self.low}, {self.high})")
        if self.dim < 1:
            raise ValueError("dim must be positive")


def random_sequences(spec: RandomSpec) -> list[Record]:
    out = []
    for i, rng in enumerate(child_rngs(spec.seed, spec.count)):
        length = int(rng.integers(spec.min_size, spec.max_size + 1))
        if spec.integer:
            values = rng.integers(math.ceil(spec.low), math.floor(spec.high) + 1, size=(length, spec.dim))
        else:
            values = rng.uniform(spec.low, spec.high, size=(length, spec.dim))
        out.append(Record(i, "", "series", values.astype(np.float64)))
    return out


def random_sets(spec: RandomSpec) -> list[Record]:
    if spec.integer:
        available = math.floor(spec.high) - math.ceil(spec.low) + 1
        if available < spec.max_size:
            raise ValueError(
                f"integer interval [{spec.low}, {spec.high}] holds {available} values, "
                f"cannot fill sets of {spec.max_size}"
            )
    out = []
    for i, rng in enumerate(child_rngs(spec.seed, spec.count)):
        card = int(rng.integers(spec.min_size, spec.max_size + 1))
        values = np.empty(0)
        while len(values) < card:
            need = card - len(values)
            if spec.integer:
                fresh = rng.integers(math.ceil(spec.low), math.floor(spec.high) + 1, size=need)
            else:
                fresh = rng.uniform(spec.low, spec.high, size=need)
            values = np.unique(np.concatenate([values, fresh.astype(np.float64)]))
        out.append(Record(i, "", "set", values))
    return out


def crop(records: Sequence[Record], min_len: int, max_len: int, seed: int) -> list[Record]:
    """Cut each series down to a random window of uniform length in ``[min_len, max_len]``."""
    out = []
    for rec, rng in zip(records, child_rngs(seed, len(records))):
        if rec.kind != "series":
            raise ValueError("crop only applies to series")
        n = len(rec.obj)
        if n == 0:
            out.append(rec)
            continue
        length = min(int(rng.integers(min_len, max_len + 1)), n)
        start = int(rng.integers(0, n - length + 1))
        out.append(Record(rec.id, rec.label, "series", rec.obj[start:start + length].copy()))
    return out


# -- cylinder-bell-funnel ----------------------------------------------------


@dataclass(frozen=True)
class CbfParams:
    a: float
    b: float
    nu: tuple[float, ...]


@dataclass(frozen=True)
class CbfSpec:
    length: int
    types: Optional[str]  # None draws a random type vector per record
    count: int
    dim: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.length < 8:
            raise ValueError("CBF length must be at least 8")
        if self.types is not None:
            _check_types(self.types)
            object.__setattr__(self, "dim", len(self.types))
        if self.dim < 1:
            raise ValueError("dim must be positive")


def _check_types(types: str) -> None:
    if not types or any(t not in CBF_TYPES for t in types):
        raise ValueError(f"CBF types must be a nonempty string over {CBF_TYPES!r}, got {types!r}")


def draw_cbf_params(length: int, dim: int, rng: np.random.Generator) -> CbfParams:
    if length < 8:
        raise ValueError("CBF length must be at least 8")
    a = rng.uniform(length / 8, 2 * length / 8)
    b = rng.uniform(6 * length / 8, 7 * length / 8)
    nu = tuple(6.0 + rng.standard_normal(dim))
    return CbfParams(float(a), float(b), nu)


def cbf_pattern(length: int, types: str, params: CbfParams) -> np.ndarray:
    """Noise-free shapes: zero outside ``[floor(a), floor(b))``, plateau or ramp inside."""
    _check_types(types)
    out = np.zeros((length, len(types)))
    lo, hi = int(math.floor(params.a)), int(math.floor(params.b))
    i = np.arange(lo, hi, dtype=float)
    span = params.b - params.a
    for k, (t, nu) in enumerate(zip(types, params.nu)):
        if t == "c":
            out[lo:hi, k] = nu
        elif t == "b":
            out[lo:hi, k] = nu * (i - params.a) / span
        else:
            out[lo:hi, k] = nu * (params.b - i) / span
    return out


def cbf_series(length: int, types: str, rng: np.random.Generator, noise: bool = True) -> tuple[np.ndarray, str]:
    """One CBF series, all dimensions sharing the same onset ``a`` and offset ``b``."""
    params = draw_cbf_params(length, len(types), rng)
    series = cbf_pattern(length, types, params)
    if noise:
        series += rng.standard_normal(series.shape)
    return series, types


def cbf_dataset(spec: CbfSpec) -> list[Record]:
    out = []
    for i, rng in enumerate(child_rngs(spec.seed, spec.count)):
        types = spec.types
        if types is None:
            types = "".join(CBF_TYPES[j] for j in rng.integers(0, 3, size=spec.dim))
        series, label = cbf_series(spec.length, types, rng)
        out.append(Record(i, label, "series", series))
    return out


# -- random accelerated motion -----------------------------------------------


def _unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
        if norm > 0:
            return v / norm


def _uniform_ball(n: int, r: float, rng: np.random.Generator) -> np.ndarray:
    return _unit_sphere(n, rng) * r * rng.uniform() ** (1.0 / n)


def ram_base(length: int, dim: int, radius: float, rng: np.random.Generator, reflect: bool = True) -> np.ndarray:
    """Impulse-driven walk inside a ball of ``radius``, bouncing off its boundary.

    Each step adds a random unit vector to the velocity. With
    ``reflect=False`` the boundary is ignored (for testing with an infinite
    radius).
    """
    if length < 1 or dim < 1 or not radius > 0:
        raise ValueError("need length >= 1, dim >= 1 and radius > 0")
    s = np.empty((length, dim))
    s[0] = _uniform_ball(dim, radius, rng) if math.isfinite(radius) else rng.standard_normal(dim)
    v = np.zeros(dim)
    for i in range(1, length):
        v = v + _unit_sphere(dim, rng)
        p = s[i - 1] + v
        norm = np.linalg.norm(p)
        if reflect and norm > radius:
            # a few ulps inside, so any way of computing the norm stays within radius
            p = p * (radius / norm) * (1.0 - 8 * np.finfo(float).eps)
            while np.linalg.norm(p) > radius:
                p = p * (1.0 - 1e-15)
            normal = p / np.linalg.norm(p)
            v = v - 2.0 * np.dot(v, normal) * normal
        s[i] = p
    return s


def time_distortion(s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample a series at uniformly random arc-length positions, keeping both endpoints."""
    s = np.asarray(s, dtype=float)
    n = len(s)
    if n < 2:
        raise ValueError("time distortion needs at least two points")
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(s, axis=0), axis=1))])
    total = arc[-1]
    if not total > 0:
        return np.repeat(s[:1], n, axis=0)
    t = np.sort(np.concatenate([[0.0, total], rng.uniform(0.0, total, size=n - 2)]))
    idx = np.searchsorted(arc, t, side="right") - 1
    idx = np.clip(idx, 0, n - 2)
    out = np.empty_like(s)
    for k, (x, i) in enumerate(zip(t, idx)):
        seg = arc[i + 1] - arc[i]
        u = (x - arc[i]) / seg if seg > 0 else 0.0
        out[k] = (1.0 - u) * s[i] + u * s[i + 1]
    return out


def space_distortion(s: np.ndarray, max_dist: float, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
    """Add standard-normal noise to every step (the first one starting from the
    origin) and keep each point within ``max_dist`` of its original position.
    """
    if max_dist < 0:
        raise ValueError("distortion must be nonnegative")
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    drift = np.zeros(s.shape[1])
    for i in range(len(s)):
        if noise:
            drift = drift + rng.standard_normal(s.shape[1])
        norm = np.linalg.norm(drift)
        if norm > max_dist:
            drift = drift * (max_dist / norm) * (1.0 - 8 * np.finfo(float).eps)
        p = s[i] + drift
        while np.linalg.norm(p - s[i]) > max_dist:
            drift = drift * (1.0 - 1e-12)
            p = s[i] + drift
        out[i] = p
    return out


@dataclass(frozen=True)
class RamSpec:
    classes: int
    per_class: int
    length: int
    dim: int = 2
    radius: float = 75.0
    distortion: float = 5.0
    include_base: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.classes, self.per_class, self.length, self.dim) < 1:
            raise ValueError("classes, per_class, length and dim must be positive")
        if not self.radius > 0 or self.distortion < 0:
            raise ValueError("radius must be positive and distortion nonnegative")


def ram_dataset(spec: RamSpec) -> list[Record]:
    """``classes`` base walks, each followed by ``per_class`` distorted copies."""
    per = spec.per_class + 1
    rngs = child_rngs(spec.seed, spec.classes * per)
    out: list[Record] = []
    for c in range(spec.classes):
        base = ram_base(spec.length, spec.dim, spec.radius, rngs[c * per])
        if spec.include_base:
            out.append(Record(len(out), str(c), "series", base))
        for j in range(1, per):
            rng = rngs[c * per + j]
            warped = time_distortion(base, rng) if spec.length >= 2 else base.copy()
            out.append(Record(len(out), str(c), "series", space_distortion(warped, spec.distortion, rng)))
    return out
