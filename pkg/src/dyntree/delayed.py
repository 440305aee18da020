"""Delayed approximate rebuilding under a per-pull operation budget.

An instance receives a base multiset ``S`` (through an iterator) and is then
fed update requests one at a time. It first builds GREEDY(S) while the first
half of the requests arrive, then runs rounds: round ``i`` applies the
requests of the previous slice of the schedule to the working tree, marks
vertices hit by many of them relative to their size, and rebuilds the
maximal marked vertices. Each round pulls half as many requests as the one
before, so the final tree is approximate with respect to ``S`` plus every
fed request.

All work runs inside one charging generator. Between two pulls the driver
resumes it only while the window stays within a pace of ``tau / headroom``
units; the work that follows the last pull is one extra window that may use
up to ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .core import ExampleMultiset, Op
from .errors import BadEpsilon, Exhausted, InternalConsistencyError, TooSmall
from .opcount import GRAIN, WAIT, OpCounter
from .rules import ThresholdRule, UNBOUNDED, leaf_label
from .tree import Node, fix_heights_upward, iter_greedy, iter_nodes

N_MIN = 8


@dataclass(frozen=True)
class RoundSchedule:
    """Pull boundaries ``t_0 < ... < t_ell`` for a budget of ``pulls`` requests.

    ``pulls`` is the largest power of two not above ``epsilon * n`` (at least
    one), so ``epsilon_adj = pulls / n``.
    """

    n: int
    pulls: int
    ell: int
    t: tuple

    @classmethod
    def plan(cls, epsilon: float, n: int) -> "RoundSchedule":
        k = math.floor(epsilon * n + 1e-9)
        pulls = 1 << (k.bit_length() - 1) if k >= 1 else 1
        ell = pulls.bit_length()  # lg2(pulls) + 1
        t = tuple(pulls - (pulls >> i) for i in range(ell)) + (pulls,)
        return cls(n, pulls, ell, t)

    @property
    def epsilon_adj(self) -> float:
        return self.pulls / self.n


class StepOutcome(NamedTuple):
    done: bool
    tree: Node | None = None


NEEDS_REQUEST = StepOutcome(False, None)


@dataclass
class TauModel:
    """Budget formula ``headroom * C * h * L * (h + d*L/eps + cost_F(m)/(eps*n))``.

    ``L = lg2 n``, ``m = n * (1 + eps)`` and ``cost_F(m) = c_f * d * m * lg2 m``.
    ``h`` is a height estimate supplied by the caller. The pace (the value
    without ``headroom``) is floored at ``floor_grains * GRAIN`` so that every
    window can make progress. Windows before the last pull stay within the
    pace; the slack up to ``tau`` absorbs the unpredictable last window.
    """

    C: float = 4.0
    c_f: float = 1.0
    floor_grains: int = 32
    headroom: float = 2.0
    override: int | None = None

    def tau(self, n: int, pulls: int, d: int, h: int) -> int:
        if self.override is not None:
            return int(self.override)
        L = max(1.0, math.log2(n))
        m = n + pulls
        eps = pulls / n
        cost = self.c_f * d * m * math.log2(max(2, m))
        val = self.C * h * L * (h + d * L / eps + cost / pulls)
        pace = max(val, self.floor_grains * GRAIN)
        return int(math.ceil(pace * self.headroom))

    def pace(self, tau: int) -> int:
        return max(min(GRAIN, tau), int(tau / self.headroom))


@dataclass
class BudgetReport:
    windows: list = field(default_factory=list)  # ops used per window
    violations: list = field(default_factory=list)  # (window index, ops)


class DelayApx:
    """One resumable delayed-rebuild computation.

    Parameters mirror the problem statement: ``source`` enumerates
    ``(example, count)`` pairs of the base set of size ``n``; requests arrive
    through :meth:`feed`. ``height_hint`` feeds the budget formula.
    """

    def __init__(self, rule: ThresholdRule, epsilon: float, n: int, source, tau=None,
                 *, d: int, zeta: int = UNBOUNDED, counter: OpCounter | None = None,
                 tau_model: TauModel | None = None, height_hint: int = 1, audit=None):
        if not 0 < epsilon < 1:
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
        if n < N_MIN:
            raise TooSmall(f"base set of size {n} is below the minimum {N_MIN}")
        self.rule = rule
        self.epsilon = epsilon
        self.n = n
        self.d = d
        self.zeta = zeta
        self.schedule = RoundSchedule.plan(epsilon, n)
        model = tau_model or TauModel()
        if tau is None:
            h = max(1, min(height_hint, zeta if zeta < UNBOUNDED else height_hint))
            tau = model.tau(n, self.schedule.pulls, d, h)
        self.tau = int(tau)
        self.pace = model.pace(self.tau)
        self.counter = counter if counter is not None else OpCounter()
        self.budget = BudgetReport()
        self.buffer = []
        self.pulled = 0
        self.done = False
        self.root = None
        self.phase = "initial"
        self.round = 0
        self.marked_log = []  # per round: list of (n_hat, delta) of V* members
        self._source = source
        self._audit = audit
        self._prog = self._program()
        self._threshold = self.schedule.epsilon_adj / (4.0 * max(1.0, math.log2(n)))

    # ------------------------------------------------------------------ driver
    @property
    def pulls_needed(self) -> int:
        return self.schedule.pulls

    @property
    def remaining(self) -> int:
        return self.schedule.pulls - self.pulled

    def _run_window(self, limit):
        used = 0
        prog = self._prog
        counter = self.counter
        while limit is None or used + GRAIN <= limit:
            try:
                ch = next(prog)
            except StopIteration:
                self._prog = None
                break
            if ch is WAIT:
                break
            units = ch[0]
            if units > GRAIN:
                raise InternalConsistencyError(f"charge chunk {units} exceeds GRAIN")
            counter.ops += units
            counter.map_accesses += ch[1]
            counter.map_log_weight += ch[2]
            used += units
        return used

    def _log_window(self, used):
        self.budget.windows.append(used)
        if used > self.tau:
            self.budget.violations.append((len(self.budget.windows) - 1, used))

    def feed(self, u) -> StepOutcome:
        """Work (within the pace) until ready, then pull ``u``."""
        if self.done:
            raise Exhausted("instance already returned its tree")
        used = self._run_window(self.pace)
        self._log_window(used)
        self.buffer.append(u)
        self.pulled += 1
        if self.pulled < self.schedule.pulls:
            return NEEDS_REQUEST
        used = self._run_window(None) if self._prog is not None else 0
        self._log_window(used)
        if self._prog is not None:
            raise InternalConsistencyError("program did not finish after the last pull")
        self.done = True
        self.phase = "done"
        return StepOutcome(True, self.root)

    # ------------------------------------------------------------------ program
    def _program(self):
        d = self.d
        base = ExampleMultiset()
        pending = 0
        for ex, c in self._source:
            base.add(ex, c)
            pending += d + 1
            if pending >= 128:
                yield (pending, 1, 0.0)
                pending = 0
        if pending:
            yield (pending, 1, 0.0)
        self.root = yield from iter_greedy(self.rule, base, self.zeta, created_round=0)
        sched = self.schedule
        for i in range(1, sched.ell + 1):
            while self.pulled < sched.t[i]:
                yield WAIT
            if self._audit is not None:
                self._audit(self, i - 1)
            self.phase = f"round {i}"
            self.round = i
            yield from self._round(i)
        if self._audit is not None:
            self._audit(self, sched.ell)

    def _round(self, i):
        sched = self.schedule
        gain = self.rule.gain
        thr = self._threshold
        marked = {}
        pending = 0
        for u in self.buffer[sched.t[i - 1]:sched.t[i]]:
            ex = u.example
            x = ex.x
            ins = u.op is Op.INS
            v = self.root
            while True:
                if v.stamp != i:
                    v.stamp = i
                    v.nhat = len(v.data)
                    v.delta = 0
                if ins:
                    v.data.add(ex)
                else:
                    v.data.remove(ex)
                v.delta += 1
                v.c += 1
                pending += 4
                if v.delta >= thr * v.nhat and v not in marked:
                    marked[v] = None
                    pending += 1
                if v.split is None:
                    if len(v.data):
                        v.label = leaf_label(gain, v.data.stats)
                    pending += max(1, len(v.data.stats.counts)) if not gain.regression else 1
                    break
                v = v.right if v.split(x) else v.left
                pending += 1
                if pending >= 128:
                    yield (pending, pending // 4, 0.0)
                    pending = 0
            if pending >= 128:
                yield (pending, pending // 4, 0.0)
                pending = 0
        # maximal marked vertices: no proper ancestor marked
        vstar = []
        for v in marked:
            a = v.parent
            ok = True
            while a is not None:
                pending += 1
                if a in marked:
                    ok = False
                    break
                a = a.parent
            if ok:
                vstar.append(v)
            if pending >= 128:
                yield (pending, 0, 0.0)
                pending = 0
        if pending:
            yield (pending, 0, 0.0)
        self.marked_log.append([(v.nhat, v.delta, len(v.data)) for v in vstar])
        for v in vstar:
            if len(v.data) == 0:
                new = Node(v.data, v.zeta, None, i)
                new.label = 0.0 if gain.regression else 0
            else:
                new = yield from iter_greedy(self.rule, v.data, v.zeta, created_round=i)
            parent = v.parent
            new.parent = parent
            if parent is None:
                self.root = new
            elif parent.left is v:
                parent.left = new
            else:
                parent.right = new
            steps = fix_heights_upward(parent) if parent is not None else 0
            yield (steps + 2, 0, 0.0)

    # ------------------------------------------------------------------ views
    def snapshot_counters(self):
        """Per-vertex ``(n_hat, delta, c, created_round)`` in pre-order."""
        if self.root is None:
            return []
        out = []
        for v in iter_nodes(self.root):
            cur = v.stamp == self.round
            out.append({
                "n_hat": v.nhat if cur else len(v.data),
                "delta": v.delta if cur else 0,
                "c": v.c,
                "created_round": v.created_round,
                "n_created": v.n_created,
                "size": len(v.data),
            })
        return out

    @property
    def max_window(self) -> int:
        return max(self.budget.windows, default=0)
