"""Labeled examples, example multisets, update requests and edit distances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

from sortedcontainers import SortedDict

from .errors import BothEmpty, DeleteAbsent, DimensionMismatch, InvalidFeature


class Example(NamedTuple):
    """A labeled example. Tuples order lexicographically by features, then label."""

    x: tuple
    y: object


def make_example(x, y, d=None) -> Example:
    """Validate and normalise a raw (features, label) pair."""
    xs = tuple(float(v) for v in x)
    for v in xs:
        if math.isnan(v):
            raise InvalidFeature(f"NaN feature value in {x!r}")
    if d is not None and len(xs) != d:
        raise DimensionMismatch(f"expected {d} features, got {len(xs)}")
    if isinstance(y, float) and math.isnan(y):
        raise InvalidFeature("NaN label")
    return Example(xs, y)


class Op(str, Enum):
    INS = "ins"
    DEL = "del"


class UpdateRequest(NamedTuple):
    example: Example
    op: Op

    @property
    def sign(self) -> int:
        return 1 if self.op is Op.INS else -1


def ins(x, y) -> UpdateRequest:
    return UpdateRequest(make_example(x, y), Op.INS)


def delete(x, y) -> UpdateRequest:
    return UpdateRequest(make_example(x, y), Op.DEL)


@dataclass
class LabelStats:
    """Label histogram plus first and second label moments.

    Classification code reads ``counts``; regression code reads ``sum_y`` and
    ``sum_yy`` (the histogram is kept too, which makes exact central moments
    cheap when the number of distinct labels is small).
    """

    counts: dict = field(default_factory=dict)
    n: int = 0
    sum_y: float = 0.0
    sum_yy: float = 0.0

    def add(self, y, k: int = 1):
        c = self.counts.get(y, 0) + k
        if c < 0:
            raise ValueError("negative label count")
        if c:
            self.counts[y] = c
        else:
            del self.counts[y]
        self.n += k
        self.sum_y += k * y
        self.sum_yy += k * y * y

    @classmethod
    def of(cls, labels: Iterable) -> "LabelStats":
        st = cls()
        for y in labels:
            st.add(y)
        return st

    @classmethod
    def from_counts(cls, counts: dict) -> "LabelStats":
        st = cls()
        for y, c in counts.items():
            if c:
                st.add(y, c)
        return st

    def copy(self) -> "LabelStats":
        return LabelStats(dict(self.counts), self.n, self.sum_y, self.sum_yy)

    def mean(self) -> float:
        return self.sum_y / self.n

    def central_m2(self) -> float:
        """Sum of squared deviations from the mean, computed from the histogram."""
        mu = math.fsum(c * y for y, c in self.counts.items()) / self.n
        return math.fsum(c * (y - mu) ** 2 for y, c in self.counts.items())


class ExampleMultiset:
    """Ordered map ``Example -> multiplicity`` with a cached total size.

    Keys are kept sorted (lexicographic on features, then label), so
    enumeration order is deterministic. Label statistics are maintained on
    every mutation.
    """

    __slots__ = ("_map", "size", "stats")

    def __init__(self, items: Iterable = ()):
        self._map = SortedDict()
        self.size = 0
        self.stats = LabelStats()
        for item in items:
            if isinstance(item, Example):
                self.add(item)
            else:
                ex, c = item
                self.add(ex, c)

    @classmethod
    def from_sorted_counts(cls, pairs: list, stats: LabelStats | None = None) -> "ExampleMultiset":
        """Bulk constructor for (example, count) pairs already in key order.

        Used by the tree builder to materialise child sets without paying a
        logarithmic insert per entry in wall-clock time; the op charge is made
        by the caller.
        """
        ms = cls.__new__(cls)
        ms._map = SortedDict(pairs)
        if stats is None:
            stats = LabelStats()
            for ex, c in pairs:
                stats.add(ex.y, c)
        ms.stats = stats
        ms.size = stats.n
        return ms

    def __len__(self) -> int:
        return self.size

    def __contains__(self, ex) -> bool:
        return ex in self._map

    def __iter__(self):
        return iter(self._map)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExampleMultiset):
            return NotImplemented
        return self._map == other._map

    def __repr__(self) -> str:
        body = ", ".join(f"{ex.x}->{ex.y}:{c}" for ex, c in self._map.items())
        return f"ExampleMultiset({{{body}}})"

    @property
    def distinct(self) -> int:
        return len(self._map)

    def count(self, ex) -> int:
        return self._map.get(ex, 0)

    def items(self):
        return self._map.items()

    def elements(self):
        """Every example repeated by its multiplicity."""
        for ex, c in self._map.items():
            for _ in range(c):
                yield ex

    def add(self, ex: Example, k: int = 1):
        if k <= 0:
            raise ValueError("multiplicity increment must be positive")
        m = self._map
        m[ex] = m.get(ex, 0) + k
        self.size += k
        self.stats.add(ex.y, k)

    def remove(self, ex: Example, index=None):
        m = self._map
        c = m.get(ex, 0)
        if c == 0:
            raise DeleteAbsent(ex, index)
        if c == 1:
            del m[ex]
        else:
            m[ex] = c - 1
        self.size -= 1
        self.stats.add(ex.y, -1)

    def apply(self, u: UpdateRequest, index=None):
        if u.op is Op.INS:
            self.add(u.example)
        else:
            self.remove(u.example, index)

    def copy(self) -> "ExampleMultiset":
        ms = ExampleMultiset.__new__(ExampleMultiset)
        ms._map = self._map.copy()
        ms.size = self.size
        ms.stats = self.stats.copy()
        return ms

    def as_dict(self) -> dict:
        return dict(self._map)

    def dimension(self):
        for ex in self._map:
            return len(ex.x)
        return None


def apply_update(S: ExampleMultiset, u: UpdateRequest, index=None) -> ExampleMultiset:
    """Apply one request in place and return ``S``."""
    S.apply(u, index)
    return S


def active_set(S: ExampleMultiset, U: Iterable[UpdateRequest]) -> ExampleMultiset:
    """Fold ``U`` over a copy of ``S``; a bad delete reports its position in ``U``."""
    out = S.copy()
    for i, u in enumerate(U):
        out.apply(u, index=i)
    return out


def edit_distance(S: ExampleMultiset, S2: ExampleMultiset) -> int:
    total = 0
    for ex, c in S.items():
        total += abs(c - S2.count(ex))
    for ex, c in S2.items():
        if ex not in S:
            total += c
    return total


def relative_edit_distance(S: ExampleMultiset, S2: ExampleMultiset) -> float:
    denom = max(len(S), len(S2))
    if denom == 0:
        raise BothEmpty("relative edit distance of two empty multisets")
    return edit_distance(S, S2) / denom
