"""Impurity functions, the conditional gain of a split and smoothness bounds.

All logarithms are base 2. The variance impurity is the mean of (y - y')^2
over ordered pairs, which is twice the usual population variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ExampleMultiset, LabelStats
from .errors import EmptySet, InternalConsistencyError

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class GainKind:
    """Which impurity drives the gain; ``c`` is the label half-range for variance."""

    name: str
    c: float | None = None

    def __post_init__(self):
        if self.name not in ("gini", "info", "var"):
            raise ValueError(f"unknown gain kind {self.name!r}")
        if self.name == "var" and (self.c is None or self.c <= 0):
            raise ValueError("variance gain needs a positive label bound c")

    @property
    def regression(self) -> bool:
        return self.name == "var"

    def __str__(self):
        return self.name if self.c is None else f"{self.name}(c={self.c:g})"


GINI = GainKind("gini")
INFO = GainKind("info")


def VARIANCE(c: float = 1.0) -> GainKind:
    return GainKind("var", float(c))


def gain_kind(name: str, c: float | None = None) -> GainKind:
    name = {"variance": "var", "ig": "info", "entropy": "info"}.get(name, name)
    if name == "var":
        return VARIANCE(1.0 if c is None else c)
    return GainKind(name)


def _check(stats: LabelStats):
    if stats.n <= 0:
        raise EmptySet("impurity of an empty set")


def gini_impurity(stats: LabelStats) -> float:
    _check(stats)
    n = stats.n
    return 1.0 - sum(c * c for c in stats.counts.values()) / (n * n)


def entropy(stats: LabelStats) -> float:
    _check(stats)
    n = stats.n
    h = 0.0
    for c in stats.counts.values():
        if c:
            h += c * math.log2(n / c)
    return h / n


def label_variance(stats: LabelStats) -> float:
    _check(stats)
    return 2.0 * stats.central_m2() / stats.n


_IMPURITY = {"gini": gini_impurity, "info": entropy, "var": label_variance}


def impurity(kind: GainKind, stats: LabelStats) -> float:
    """g(S); the empty set has impurity 0 by convention."""
    if stats.n == 0:
        return 0.0
    return _IMPURITY[kind.name](stats)


def clamp_gain(g: float, scale: float) -> float:
    if g >= 0:
        return g
    if g >= -CLAMP_TOL * max(1.0, abs(scale)):
        return 0.0
    raise InternalConsistencyError(f"negative gain {g!r}")


def gain_from_stats(kind: GainKind, parent: LabelStats, s0: LabelStats, s1: LabelStats) -> float:
    n = parent.n
    if n == 0:
        raise EmptySet("gain of an empty set")
    gp = impurity(kind, parent)
    g = gp - (s0.n / n) * impurity(kind, s0) - (s1.n / n) * impurity(kind, s1)
    return clamp_gain(g, gp)


def partition_stats(S, sigma):
    """Label stats of the sigma=0 and sigma=1 sides of ``S``."""
    s0, s1 = LabelStats(), LabelStats()
    for ex, c in S.items():
        (s1 if sigma(ex.x) else s0).add(ex.y, c)
    return s0, s1


def conditional_gain(kind: GainKind, S: ExampleMultiset, sigma) -> float:
    """g(S) - |S0|/|S| g(S0) - |S1|/|S| g(S1) for the partition induced by ``sigma``.

    ``sigma`` is any callable on feature tuples returning a truthy value for
    the 1-side (a :class:`~dyntree.splits.SplitRule` works).
    """
    if len(S) == 0:
        raise EmptySet("conditional gain of an empty set")
    s0, s1 = partition_stats(S, sigma)
    return gain_from_stats(kind, S.stats, s0, s1)


def smoothness_bound(kind: GainKind, eta: float, n: int) -> float:
    """Upper bound on |G(S, s) - G(S', s)| when ED*(S, S') = eta and max size n."""
    if kind.name == "gini":
        return 48.0 * eta
    if kind.name == "info":
        return 60.0 * eta * math.log2(n)
    return 36.0 * kind.c**2 * eta


def per_edit_bound(kind: GainKind, n: int) -> float:
    """Bound on |g(S) - g(S+s)| for one edit, n = max(|S|, |S+s|)."""
    if kind.name == "gini":
        return 4.0 / n
    if kind.name == "info":
        return 5.0 * math.log2(n) / n
    return 3.0 * kind.c**2 / n
