"""Threshold decision rules: split on the max-gain rule or emit a constant label."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .core import ExampleMultiset, LabelStats
from .errors import EmptySet
from .gains import GainKind
from .opcount import chunked, drain
from .splits import SplitRule, iter_best_split

# Depth budget used when no maximum depth is configured.
UNBOUNDED = 1 << 30


@dataclass(frozen=True)
class ThresholdRule:
    gain: GainKind
    alpha: float
    k_star: int = 0
    h_star: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.gain.name == "gini" and self.alpha > 1:
            raise ValueError("alpha must lie in (0, 1] for the Gini gain")
        if self.k_star < 0:
            raise ValueError("k_star must be non-negative")
        if self.h_star is not None and self.h_star < 0:
            raise ValueError("h_star must be non-negative")

    @property
    def root_zeta(self) -> int:
        return UNBOUNDED if self.h_star is None else self.h_star

    @classmethod
    def for_feasibility(cls, gain: GainKind, alpha: float, **kw) -> "ThresholdRule":
        """The rule whose approximate trees are (alpha, beta)-feasible: threshold alpha/2."""
        return cls(gain, alpha / 2.0, **kw)


class Split(NamedTuple):
    rule: SplitRule
    gain: float


class Leaf(NamedTuple):
    label: object


def majority_from_stats(stats: LabelStats):
    if stats.n <= 0:
        raise EmptySet("majority label of an empty set")
    best_y, best_c = None, -1
    for y, c in stats.counts.items():
        if c > best_c or (c == best_c and y < best_y):
            best_y, best_c = y, c
    return best_y


def average_from_stats(stats: LabelStats) -> float:
    if stats.n <= 0:
        raise EmptySet("average label of an empty set")
    return stats.sum_y / stats.n


def majority_label(S: ExampleMultiset):
    """A most frequent label; ties go to the smallest label."""
    return majority_from_stats(S.stats)


def average_label(S: ExampleMultiset) -> float:
    return average_from_stats(S.stats)


def leaf_label(gain: GainKind, stats: LabelStats):
    return average_from_stats(stats) if gain.regression else majority_from_stats(stats)


def iter_evaluate(rule: ThresholdRule, S: ExampleMultiset, zeta: int):
    """Charging generator returning a :class:`Split` or a :class:`Leaf`."""
    n = len(S)
    if n == 0:
        raise EmptySet("decision on an empty set")
    st = S.stats
    # label cost: one pass over the histogram (mode) or O(1) (mean)
    yield from chunked(1 if rule.gain.regression else max(1, len(st.counts)))
    label = leaf_label(rule.gain, st)
    if zeta <= 0 or n <= rule.k_star:
        return Leaf(label)
    res = yield from iter_best_split(S, rule.gain)
    if res is None or res.gain < rule.alpha:
        return Leaf(label)
    return Split(res.rule, res.gain)


def evaluate(rule: ThresholdRule, S: ExampleMultiset, zeta: int = UNBOUNDED, counter=None):
    return drain(iter_evaluate(rule, S, zeta), counter)


def balancedness_gamma(kind: GainKind, alpha: float, n: int, c: float | None = None) -> float:
    """Minimum side fraction of any split made by a threshold-alpha max-gain rule."""
    if kind.name == "gini":
        g = alpha / 16.0
    elif kind.name == "info":
        g = alpha / (20.0 * math.log2(n))
    else:
        cc = kind.c if c is None else c
        g = alpha / (12.0 * cc * cc)
    return min(g, 0.5)
