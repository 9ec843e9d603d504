"""Metric subset spaces: a total preorder on object sizes plus an asymmetric
distance whose triangle inequality only has to hold along size-ordered chains.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

__all__ = [
    "SizeOrder",
    "SubsetSpace",
    "compare",
    "is_sub",
    "reverse_space",
    "check_chain_triangle",
    "chain_tolerance",
]


class SizeOrder(enum.Enum):
    STRICTLY_SMALLER = -1
    EQUIVALENT = 0
    STRICTLY_LARGER = 1


def chain_tolerance(rhs: float) -> float:
    """Floating-point slack allowed when checking d(x,z) <= rhs."""
    return 1e-9 * (1.0 + rhs)


@dataclass(frozen=True)
class SubsetSpace:
    """A metric subset space over some object type.

    The preorder is expressed through ``size``: ``x`` is below ``y`` iff
    ``size(x) <= size(y)``. Any total preorder on a set of objects can be
    written this way, and the tree relies on it to compare sizes cheaply.

    ``many_to_one`` and ``one_to_many`` are optional batched forms of
    ``distance``; when absent, plain loops are used.
    """

    name: str
    size: Callable[[Any], float]
    distance: Callable[[Any, Any], float]
    many_to_one_fn: Optional[Callable[[Sequence[Any], Any], np.ndarray]] = None
    one_to_many_fn: Optional[Callable[[Any, Sequence[Any]], np.ndarray]] = None
    lower_bound: Optional[Callable[[Any, Any], float]] = None
    kind: str = ""

    def is_sub(self, x, y) -> bool:
        return self.size(x) <= self.size(y)

    def compare(self, x, y) -> SizeOrder:
        return compare(self, x, y)

    def many_to_one(self, xs: Sequence[Any], y) -> np.ndarray:
        """Distances ``d(x, y)`` for every ``x`` in ``xs``."""
        if not len(xs):
            return np.empty(0)
        if self.many_to_one_fn is not None:
            return self.many_to_one_fn(xs, y)
        return np.array([self.distance(x, y) for x in xs], dtype=float)

    def one_to_many(self, x, ys: Sequence[Any]) -> np.ndarray:
        """Distances ``d(x, y)`` for every ``y`` in ``ys``."""
        if not len(ys):
            return np.empty(0)
        if self.one_to_many_fn is not None:
            return self.one_to_many_fn(x, ys)
        return np.array([self.distance(x, y) for y in ys], dtype=float)


def is_sub(space: SubsetSpace, x, y) -> bool:
    return space.is_sub(x, y)


def compare(space: SubsetSpace, x, y) -> SizeOrder:
    below = space.is_sub(x, y)
    above = space.is_sub(y, x)
    if below and above:
        return SizeOrder.EQUIVALENT
    if below:
        return SizeOrder.STRICTLY_SMALLER
    return SizeOrder.STRICTLY_LARGER


def reverse_space(space: SubsetSpace) -> SubsetSpace:
    """Swap subset and superset roles: flip the preorder and the arguments."""
    size = space.size
    dist = space.distance
    m2o = space.many_to_one
    o2m = space.one_to_many
    bound = space.lower_bound
    name = space.name[len("reversed-"):] if space.name.startswith("reversed-") else f"reversed-{space.name}"
    return SubsetSpace(
        name=name,
        size=lambda x: -size(x),
        distance=lambda x, y: dist(y, x),
        many_to_one_fn=lambda xs, y: o2m(y, xs),
        one_to_many_fn=lambda x, ys: m2o(ys, x),
        lower_bound=None if bound is None else (lambda x, y: bound(y, x)),
        kind=space.kind,
    )


def check_chain_triangle(space: SubsetSpace, x, y, z) -> bool:
    """True unless ``x ⊑ y ⊑ z`` holds and ``d(x,z) > d(x,y) + d(y,z)``."""
    if not (space.is_sub(x, y) and space.is_sub(y, z)):
        return True
    rhs = space.distance(x, y) + space.distance(y, z)
    return space.distance(x, z) <= rhs + chain_tolerance(rhs)
