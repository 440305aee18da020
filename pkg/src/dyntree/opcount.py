"""Elementary-operation accounting.

All algorithmic work in the package is written as generators that yield
*charges*: ``(units, map_accesses, log_weight)`` tuples. ``units`` is the
number of elementary operations performed since the previous yield (one per
feature comparison, associative-map access or arithmetic gain update);
``map_accesses`` is how many of those units were map accesses and
``log_weight`` is the same accesses weighted by log2 of the map size, which
gives the comparison series for a pointer-machine cost model.

A single yield never covers more than :data:`GRAIN` units. Budgeted callers
rely on this to stop *before* a window overflows.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

GRAIN = 256
# Work loops yield as soon as they have accumulated this much.
FLUSH = GRAIN // 2

WAIT = None  # yielded by resumable programs that need another pulled request


@dataclass
class OpCounter:
    ops: int = 0
    map_accesses: int = 0
    map_log_weight: float = 0.0

    def charge(self, units, maps=0, log_weight=0.0):
        if units < 0:
            raise ValueError("op counter never decreases")
        self.ops += units
        self.map_accesses += maps
        self.map_log_weight += log_weight

    def add(self, charge):
        units, maps, weight = charge
        self.charge(units, maps, weight)

    @property
    def log_weighted_ops(self) -> float:
        """Ops with every map access costed at log2(size) instead of 1."""
        return self.ops - self.map_accesses + self.map_log_weight

    def snapshot(self):
        return (self.ops, self.map_accesses, self.map_log_weight)


@dataclass
class UpdateStats:
    """Per-update op totals, kept by the maintainer and the CLI."""

    per_update: list = field(default_factory=list)

    def record(self, ops):
        self.per_update.append(ops)

    @property
    def max(self):
        return max(self.per_update, default=0)

    @property
    def total(self):
        return sum(self.per_update)

    def histogram(self, bins=16):
        """Log2-bucketed histogram: bucket b counts updates with ops in [2^b, 2^(b+1))."""
        hist = Counter()
        for ops in self.per_update:
            hist[max(ops, 1).bit_length() - 1] += 1
        return {str(1 << b): hist[b] for b in sorted(hist)[:bins]}


def chunked(units: int, maps: int = 0, log_weight: float = 0.0):
    """Split one large charge into chunks of at most GRAIN units."""
    while units > GRAIN:
        yield (GRAIN, 0, 0.0)
        units -= GRAIN
    if units > 0 or maps:
        yield (units, maps, log_weight)


def drain(gen, counter=None):
    """Run a charging generator to completion and return its result."""
    try:
        while True:
            charge = next(gen)
            if charge is WAIT:
                raise RuntimeError("unbudgeted drain cannot wait for requests")
            if counter is not None:
                counter.add(charge)
    except StopIteration as stop:
        return stop.value
