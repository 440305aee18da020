"""Fully dynamic maintenance with one lazy delayed-rebuild instance per vertex.

Each request walks its root-to-leaf path. At every vertex it is appended to
that vertex's delayed-rebuild instance (created on first use at half the
target epsilon); when an instance finishes, its tree replaces the subtree at
that vertex and the walk stops there. Outer vertices never mutate their
stored multiset between rebuilds; leaves keep a live label tally so their
label always reflects the current active set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import ExampleMultiset, Op, UpdateRequest
from .delayed import N_MIN, DelayApx, TauModel
from .errors import BadEpsilon, DeleteAbsent, DimensionMismatch
from .opcount import OpCounter, UpdateStats, drain
from .rules import ThresholdRule, leaf_label
from .tree import DecisionTree, Node, fix_heights_upward, iter_greedy, iter_nodes


class LiveDelta:
    """Signed label changes at a leaf since its stored multiset was frozen."""

    __slots__ = ("counts", "n", "sum_y")

    def __init__(self):
        self.counts = {}
        self.n = 0
        self.sum_y = 0.0

    def add(self, y, k):
        c = self.counts.get(y, 0) + k
        if c:
            self.counts[y] = c
        else:
            del self.counts[y]
        self.n += k
        self.sum_y += k * y


@dataclass
class RebuildEvent:
    update: int  # 1-based index of the request that completed the rebuild
    depth: int
    size_before: int  # |D| at the vertex when its previous subtree was built
    size_after: int
    requests: int  # requests that reached the vertex since its previous build
    kind: str  # "delayed" or "bypass"

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ApplyRecord:
    ops: int
    instance_ops: int
    allowance: int
    other_ops: int
    path_len: int


@dataclass
class MaintainerStats:
    updates: UpdateStats = field(default_factory=UpdateStats)
    records: list = field(default_factory=list)
    rebuilds: list = field(default_factory=list)
    budget_violations: list = field(default_factory=list)
    instances_created: int = 0


class Maintainer:
    """Dynamic decision tree under insertions and deletions.

    ``record_applies`` keeps a per-request :class:`ApplyRecord` (useful in
    tests and for the CLI report; costs a little memory per request).
    """

    def __init__(self, rule: ThresholdRule, epsilon: float, d: int, *,
                 tau_model: TauModel | None = None, n_min: int = N_MIN,
                 counter: OpCounter | None = None, record_applies: bool = True,
                 audit=None):
        if not 0 < epsilon < 1:
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
        self.rule = rule
        self.epsilon = epsilon
        self.d = d
        self.tau_model = tau_model or TauModel()
        self.n_min = max(n_min, N_MIN)
        self.counter = counter if counter is not None else OpCounter()
        self.record_applies = record_applies
        self.audit = audit
        self.active = ExampleMultiset()
        self.tree = DecisionTree(self._empty_leaf(None, rule.root_zeta), d, rule.gain.regression)
        self.stats = MaintainerStats()
        self.n_updates = 0

    # ---------------------------------------------------------------- helpers
    @property
    def default_label(self):
        return 0.0 if self.rule.gain.regression else 0

    def _empty_leaf(self, data, zeta):
        v = Node(data if data is not None else ExampleMultiset(), zeta)
        v.label = self.default_label
        return v

    def _splice(self, old: Node, new: Node):
        parent = old.parent
        new.parent = parent
        if parent is None:
            self.tree.root = new
        elif parent.left is old:
            parent.left = new
        else:
            parent.right = new
        return fix_heights_upward(parent) if parent is not None else 0

    def _live_label(self, v: Node):
        """Label of the current active set at leaf ``v`` (frozen data plus tally)."""
        live = v.live
        base = v.data.stats
        if live is None or not live.counts:
            return leaf_label(self.rule.gain, base) if base.n else self.default_label
        n = base.n + live.n
        if n == 0:
            return self.default_label
        if self.rule.gain.regression:
            return (base.sum_y + live.sum_y) / n
        best_y, best_c = None, -1
        for y in base.counts.keys() | live.counts.keys():
            c = base.counts.get(y, 0) + live.counts.get(y, 0)
            if c > best_c or (c == best_c and y < best_y):
                best_y, best_c = y, c
        return best_y

    # ---------------------------------------------------------------- queries
    def active_size(self) -> int:
        return len(self.active)

    def height(self) -> int:
        return self.tree.height

    def predict(self, x):
        if len(x) != self.d:
            raise DimensionMismatch(f"expected {self.d} features, got {len(x)}")
        return self.tree.predict(x)

    def live_instances(self) -> int:
        return sum(1 for v in iter_nodes(self.tree.root) if v.inst is not None)

    def report(self) -> dict:
        ups = self.stats.updates
        return {
            "updates": self.n_updates,
            "active_size": self.active_size(),
            "height": self.height(),
            "vertices": self.tree.size(),
            "max_ops_per_update": ups.max,
            "total_ops": self.counter.ops,
            "map_accesses": self.counter.map_accesses,
            "map_log_weighted_ops": round(self.counter.log_weighted_ops, 3),
            "ops_histogram": ups.histogram(),
            "rebuilds": len(self.stats.rebuilds),
            "root_rebuilds": sum(1 for e in self.stats.rebuilds if e.depth == 0),
            "instances_created": self.stats.instances_created,
            "live_instances": self.live_instances(),
            "budget_violations": len(self.stats.budget_violations),
        }

    # ---------------------------------------------------------------- updates
    def bulk_load(self, S: ExampleMultiset):
        """Replace the state by GREEDY(S) built directly (not charged per update)."""
        self.active = S.copy()
        if len(S) == 0:
            root = self._empty_leaf(None, self.rule.root_zeta)
        else:
            root = drain(iter_greedy(self.rule, S.copy(), self.rule.root_zeta), self.counter)
        self.tree = DecisionTree(root, self.d, self.rule.gain.regression)

    def apply(self, u: UpdateRequest):
        ex = u.example
        if len(ex.x) != self.d:
            raise DimensionMismatch(f"expected {self.d} features, got {len(ex.x)}")
        index = self.n_updates
        if u.op is Op.DEL and ex not in self.active:
            raise DeleteAbsent(ex, index)
        self.active.apply(u, index)
        self.n_updates += 1

        counter = self.counter
        start = counter.ops
        inst_ops = 0
        allowance = 0
        sign = 1 if u.op is Op.INS else -1
        x = ex.x
        depth = 0
        v = self.tree.root
        path_len = 0
        regression = self.rule.gain.regression
        while True:
            path_len += 1
            counter.charge(2, 1)
            v.reached += 1
            if len(v.data) < self.n_min:
                self._bypass(v, u, depth)
                break
            inst = v.inst
            if inst is None:
                inst = DelayApx(self.rule, self.epsilon / 2.0, len(v.data), v.data.items(),
                                d=self.d, zeta=v.zeta, counter=counter,
                                tau_model=self.tau_model, height_hint=v.height + 2,
                                audit=self.audit)
                v.inst = inst
                self.stats.instances_created += 1
            before = counter.ops
            out = inst.feed(u)
            inst_ops += counter.ops - before
            allowance += inst.tau
            if out.done:
                allowance += inst.tau
                for w, used in inst.budget.violations:
                    self.stats.budget_violations.append((index + 1, depth, w, used, inst.tau))
                new = out.tree
                steps = self._splice(v, new)
                counter.charge(steps + 1)
                self.stats.rebuilds.append(RebuildEvent(index + 1, depth, len(v.data),
                                                        len(new.data), v.reached, "delayed"))
                break
            if v.split is None:
                live = v.live
                if live is None:
                    live = v.live = LiveDelta()
                live.add(ex.y, sign)
                v.label = self._live_label(v)
                counter.charge(1 if regression else max(1, len(v.data.stats.counts)), 1)
                break
            v = v.right if v.split(x) else v.left
            depth += 1
        ops = counter.ops - start
        self.stats.updates.record(ops)
        if self.record_applies:
            self.stats.records.append(ApplyRecord(ops, inst_ops, allowance,
                                                  ops - inst_ops, path_len))

    def _bypass(self, v: Node, u: UpdateRequest, depth: int):
        """Small vertex: rebuild its subtree eagerly from the exact current set."""
        S = v.data.copy()
        S.apply(u)
        self.counter.charge(len(S) * (self.d + 1) + 1, 1)
        if len(S) == 0:
            new = self._empty_leaf(S, v.zeta)
        else:
            new = drain(iter_greedy(self.rule, S, v.zeta), self.counter)
        steps = self._splice(v, new)
        self.counter.charge(steps + 1)
        self.stats.rebuilds.append(RebuildEvent(self.n_updates, depth, len(v.data), len(S),
                                                v.reached, "bypass"))

    def run(self, requests):
        for u in requests:
            self.apply(u)
        return self
