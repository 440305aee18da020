"""Exact maximum-gain axis split search with cumulative counter tables.

For one feature the search builds ``C[t]`` (count per value) and
``CL[t][y]`` (count per value and label), sorts the distinct values once and
sweeps them left to right. The sweep keeps running sums from which the gain
of every threshold follows in O(1) amortised per (value, label) cell:

* Gini:     ``N_in = sum_y a_y^2`` and ``N_out = sum_y (L_y - a_y)^2``
* entropy:  ``E_in = sum_y a_y lg a_y`` and ``E_out`` likewise
* variance: the sum of centred labels on the 1-side

where ``a_y`` counts label ``y`` among examples with ``x_j < t``.

Candidate order (which fixes tie-breaking) is feature ascending, then every
LT threshold ascending, then every EQ value ascending. A candidate replaces
the incumbent only when its gain is larger by more than ``TIE_TOL`` relative.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .core import ExampleMultiset
from .errors import BadFeatureIndex, EmptySet
from .gains import GainKind, clamp_gain
from .opcount import FLUSH, chunked, drain

LT = "lt"
EQ = "eq"
TIE_TOL = 1e-12


class SplitRule(NamedTuple):
    """sigma(x) = 1 iff ``x[feature] < threshold`` (LT) or ``== threshold`` (EQ)."""

    feature: int
    threshold: float
    kind: str = LT

    def __call__(self, x) -> bool:
        if self.kind == LT:
            return x[self.feature] < self.threshold
        return x[self.feature] == self.threshold

    def describe(self) -> str:
        op = "<" if self.kind == LT else "=="
        return f"x[{self.feature}] {op} {self.threshold:g}"


class SplitResult(NamedTuple):
    rule: SplitRule
    gain: float


def beats(gain: float, best: float | None) -> bool:
    """Sequential tie rule shared with the brute-force oracle."""
    return best is None or gain > best + TIE_TOL * max(1.0, abs(best))


def _xlog(v):
    return v * math.log2(v) if v > 0 else 0.0


def _lg(v):
    return math.log2(v) if v > 1 else 0.0


def _prepare(S: ExampleMultiset, kind: GainKind):
    n = len(S)
    if n == 0:
        raise EmptySet("split search on an empty set")
    entries = list(S.items())
    L = S.stats.counts
    if kind.name == "var":
        mu = S.stats.sum_y / n
    else:
        mu = 0.0
    return n, entries, L, mu


def iter_best_split(S: ExampleMultiset, kind: GainKind, features=None, trace=None, _prep=None):
    """Charging generator; returns a :class:`SplitResult` or ``None``.

    ``None`` means no proper split exists (every candidate leaves a side
    empty). ``trace``, if a list, receives ``(j, t, n_in, n_out)`` after every
    Gini LT sweep step so the cumulative sums can be checked independently.
    """
    n, entries, L, mu = _prep or _prepare(S, kind)
    if features is None:
        d = len(entries[0][0].x)
        features = range(d)
    best = None
    best_gain = None
    name = kind.name

    # global label terms: Q = sum L^2 for Gini, sum L lg L for entropy
    k = len(L)
    Q = sum(c * c for c in L.values())
    SLL = sum(_xlog(c) for c in L.values())
    if name == "gini":
        base = -Q / (n * n)
    elif name == "info":
        base = _lg(n) - SLL / n
    else:
        base = 0.0
    yield from chunked(k)
    pending = 0
    maps = 0

    for j in features:
        # --- counter tables ------------------------------------------------
        C = {}
        CL = {}
        for ex, c in entries:
            t = ex.x[j]
            if t in C:
                C[t] += c
                row = CL[t]
                if name == "var":
                    CL[t] = row + c * (ex.y - mu)
                else:
                    row[ex.y] = row.get(ex.y, 0) + c
            else:
                C[t] = c
                CL[t] = c * (ex.y - mu) if name == "var" else {ex.y: c}
            pending += 3
            maps += 2
            if pending >= FLUSH:
                yield (pending, maps, maps * _lg(len(C) + 1))
                pending = 0
                maps = 0
        kd = len(C)
        if kd < 2:
            continue
        # sort the distinct values; charge k*ceil(lg k) in bounded chunks
        sort_cost = kd * max(1, math.ceil(math.log2(kd)))
        while sort_cost > 0:
            take = min(sort_cost, FLUSH)
            pending += take
            sort_cost -= take
            if pending >= FLUSH:
                yield (pending, maps, maps * _lg(kd + 1))
                pending = 0
                maps = 0
        ts = sorted(C)

        # --- LT sweep ------------------------------------------------------
        if name == "gini":
            n_in = 0
            n_out = Q
            nA = 0
            A = {}
            for i in range(kd - 1):
                t = ts[i]
                for y, c in CL[t].items():
                    a = A.get(y, 0)
                    rest = L[y] - a
                    n_in += 2 * a * c + c * c
                    n_out += (rest - c) * (rest - c) - rest * rest
                    A[y] = a + c
                    pending += 3
                    maps += 2
                    if pending >= FLUSH:
                        yield (pending, maps, maps * _lg(k + 1))
                        pending = 0
                        maps = 0
                nA += C[t]
                nB = n - nA
                g = (n_in / nA + n_out / nB) / n + base
                if trace is not None:
                    trace.append((j, ts[i + 1], n_in, n_out))
                pending += 2
                if best_gain is None or g > best_gain + TIE_TOL * max(1.0, abs(best_gain)):
                    best_gain = g
                    best = (j, ts[i + 1], LT)
                if pending >= FLUSH:
                    yield (pending, maps, maps * _lg(k + 1))
                    pending = 0
                    maps = 0
        elif name == "info":
            e_in = 0.0
            e_out = SLL
            nA = 0
            A = {}
            for i in range(kd - 1):
                t = ts[i]
                for y, c in CL[t].items():
                    a = A.get(y, 0)
                    ly = L[y]
                    e_in += _xlog(a + c) - _xlog(a)
                    e_out += _xlog(ly - a - c) - _xlog(ly - a)
                    A[y] = a + c
                    pending += 3
                    maps += 2
                    if pending >= FLUSH:
                        yield (pending, maps, maps * _lg(k + 1))
                        pending = 0
                        maps = 0
                nA += C[t]
                nB = n - nA
                g = base - (_xlog(nA) - e_in + _xlog(nB) - e_out) / n
                pending += 2
                if best_gain is None or g > best_gain + TIE_TOL * max(1.0, abs(best_gain)):
                    best_gain = g
                    best = (j, ts[i + 1], LT)
                if pending >= FLUSH:
                    yield (pending, maps, maps * _lg(k + 1))
                    pending = 0
                    maps = 0
        else:
            sA = 0.0
            nA = 0
            for i in range(kd - 1):
                t = ts[i]
                sA += CL[t]
                nA += C[t]
                nB = n - nA
                g = 2.0 / n * sA * sA * (1.0 / nA + 1.0 / nB)
                pending += 4
                maps += 2
                if best_gain is None or g > best_gain + TIE_TOL * max(1.0, abs(best_gain)):
                    best_gain = g
                    best = (j, ts[i + 1], LT)
                if pending >= FLUSH:
                    yield (pending, maps, maps * _lg(kd + 1))
                    pending = 0
                    maps = 0

        # --- EQ family -----------------------------------------------------
        for t in ts:
            ct = C[t]
            if ct >= n:
                continue
            nB = n - ct
            if name == "gini":
                n_in = 0
                n_out = Q
                for y, c in CL[t].items():
                    ly = L[y]
                    n_in += c * c
                    n_out -= ly * ly - (ly - c) * (ly - c)
                    pending += 2
                    maps += 1
                    if pending >= FLUSH:
                        yield (pending, maps, maps * _lg(k + 1))
                        pending = 0
                        maps = 0
                g = (n_in / ct + n_out / nB) / n + base
            elif name == "info":
                e_in = 0.0
                e_out = SLL
                for y, c in CL[t].items():
                    ly = L[y]
                    e_in += _xlog(c)
                    e_out -= _xlog(ly) - _xlog(ly - c)
                    pending += 2
                    maps += 1
                    if pending >= FLUSH:
                        yield (pending, maps, maps * _lg(k + 1))
                        pending = 0
                        maps = 0
                g = base - (_xlog(ct) - e_in + _xlog(nB) - e_out) / n
            else:
                s = CL[t]
                g = 2.0 / n * s * s * (1.0 / ct + 1.0 / nB)
                pending += 2
                maps += 1
            pending += 2
            if best_gain is None or g > best_gain + TIE_TOL * max(1.0, abs(best_gain)):
                best_gain = g
                best = (j, t, EQ)
            if pending >= FLUSH:
                yield (pending, maps, maps * _lg(kd + 1))
                pending = 0
                maps = 0

    if pending:
        yield (pending, maps, maps * _lg(k + 1))
    if best is None:
        return None
    return SplitResult(SplitRule(*best), clamp_gain(best_gain, 1.0))


def best_split(S: ExampleMultiset, kind: GainKind, counter=None, trace=None):
    """Best proper axis split of ``S`` over all features, or ``None``."""
    return drain(iter_best_split(S, kind, trace=trace), counter)


def best_split_for_feature(S: ExampleMultiset, j: int, kind: GainKind, counter=None):
    if len(S) == 0:
        raise EmptySet("split search on an empty set")
    d = S.dimension()
    if not 0 <= j < d:
        raise BadFeatureIndex(f"feature {j} outside [0, {d})")
    return drain(iter_best_split(S, kind, features=(j,)), counter)
