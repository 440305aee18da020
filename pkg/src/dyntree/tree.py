"""Pointer-linked decision trees and the greedy builder.

Every vertex stores the multiset of examples that reached it when its
subtree was built (``node.data``). The builder is a charging generator with an
explicit work stack so a budgeted driver can suspend it between chunks.
"""

from __future__ import annotations

import json
from collections import deque

from .core import ExampleMultiset, LabelStats
from .errors import DimensionMismatch, EmptySet, ImproperSplit
from .opcount import FLUSH, drain
from .rules import Leaf, ThresholdRule, UNBOUNDED, iter_evaluate
from .splits import EQ, LT, SplitRule

TREE_SCHEMA = "dyntree.tree/1"


class Node:
    """One vertex. ``split is None`` marks a leaf.

    Counter fields are owned by whoever runs the tree: the delayed rebuilder
    uses ``stamp``/``nhat``/``delta``/``c``; the dynamic maintainer uses
    ``inst``, ``live`` and ``reached``.
    """

    __slots__ = (
        "split", "label", "left", "right", "parent", "data", "height", "zeta",
        "created_round", "n_created", "stamp", "nhat", "delta", "c",
        "inst", "live", "reached",
    )

    def __init__(self, data=None, zeta=UNBOUNDED, parent=None, created_round=0):
        self.split = None
        self.label = None
        self.left = None
        self.right = None
        self.parent = parent
        self.data = data
        self.height = 0
        self.zeta = zeta
        self.created_round = created_round
        self.n_created = len(data) if data is not None else 0
        self.stamp = -1
        self.nhat = 0
        self.delta = 0
        self.c = 0
        self.inst = None
        self.live = None
        self.reached = 0

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def child_for(self, x):
        return self.right if self.split(x) else self.left

    def __repr__(self):
        if self.split is None:
            return f"Leaf({self.label!r}, n={self.n_created})"
        return f"Node({self.split.describe()}, n={self.n_created})"


def iter_nodes(root):
    """Pre-order traversal (node, left subtree, right subtree)."""
    stack = [root]
    while stack:
        v = stack.pop()
        yield v
        if v.split is not None:
            stack.append(v.right)
            stack.append(v.left)


def fix_heights_upward(v, charge=None):
    """Recompute cached heights from ``v`` to the root; returns the steps taken."""
    steps = 0
    while v is not None:
        h = 0 if v.split is None else 1 + max(v.left.height, v.right.height)
        steps += 1
        if h == v.height and steps > 1:
            break
        v.height = h
        v = v.parent
    return steps


def iter_greedy(rule: ThresholdRule, S: ExampleMultiset, zeta=UNBOUNDED, created_round=0):
    """Charging generator building GREEDY(S); ``S`` becomes the root's data.

    Child multisets are materialised. Returns the root :class:`Node`.
    """
    if len(S) == 0:
        raise EmptySet("cannot build a tree on an empty set")
    root = Node(S, zeta, None, created_round)
    stack = [root]
    order = []
    while stack:
        v = stack.pop()
        order.append(v)
        dec = yield from iter_evaluate(rule, v.data, v.zeta)
        if isinstance(dec, Leaf):
            v.label = dec.label
            continue
        sigma = dec.rule
        j, t = sigma.feature, sigma.threshold
        eq = sigma.kind == EQ
        p0, p1 = [], []
        s0, s1 = LabelStats(), LabelStats()
        pending = 0
        for ex, c in v.data.items():
            xv = ex.x[j]
            if (xv == t) if eq else (xv < t):
                p1.append((ex, c))
                s1.add(ex.y, c)
            else:
                p0.append((ex, c))
                s0.add(ex.y, c)
            pending += 2
            if pending >= FLUSH:
                yield (pending, pending // 2, 0.0)
                pending = 0
        if pending:
            yield (pending, pending // 2, 0.0)
        if not p0 or not p1:
            raise ImproperSplit(f"{sigma.describe()} leaves a side empty")
        v.split = sigma
        cz = v.zeta - 1 if v.zeta < UNBOUNDED else UNBOUNDED
        v.left = Node(ExampleMultiset.from_sorted_counts(p0, s0), cz, v, created_round)
        v.right = Node(ExampleMultiset.from_sorted_counts(p1, s1), cz, v, created_round)
        stack.append(v.right)
        stack.append(v.left)
    pending = 0
    for v in reversed(order):
        v.height = 0 if v.split is None else 1 + max(v.left.height, v.right.height)
        pending += 1
        if pending >= FLUSH:
            yield (pending, 0, 0.0)
            pending = 0
    if pending:
        yield (pending, 0, 0.0)
    return root


class DecisionTree:
    """A rooted binary tree over ``d``-dimensional examples."""

    def __init__(self, root: Node, d: int, regression: bool = False):
        self.root = root
        self.d = d
        self.regression = regression

    @property
    def height(self) -> int:
        return self.root.height

    def _check(self, x):
        if len(x) != self.d:
            raise DimensionMismatch(f"expected {self.d} features, got {len(x)}")

    def path(self, x) -> list:
        self._check(x)
        v = self.root
        out = [v]
        while v.split is not None:
            v = v.right if v.split(x) else v.left
            out.append(v)
        return out

    def predict(self, x):
        self._check(x)
        v = self.root
        while v.split is not None:
            v = v.right if v.split(x) else v.left
        return v.label

    def nodes(self):
        return iter_nodes(self.root)

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def leaves(self):
        return [v for v in self.nodes() if v.split is None]

    def to_dict(self) -> dict:
        ids = {}
        order = list(self.nodes())
        for i, v in enumerate(order):
            ids[id(v)] = i
        out = []
        for v in order:
            if v.split is None:
                out.append({"id": ids[id(v)], "split": None, "label": v.label,
                            "left": None, "right": None})
            else:
                s = v.split
                out.append({
                    "id": ids[id(v)],
                    "split": {"feature": s.feature, "threshold": s.threshold, "kind": s.kind},
                    "label": None,
                    "left": ids[id(v.left)],
                    "right": ids[id(v.right)],
                })
        return {
            "schema": TREE_SCHEMA,
            "d": self.d,
            "label_type": "real" if self.regression else "class",
            "root": 0,
            "nodes": out,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        if doc.get("schema") != TREE_SCHEMA:
            raise ValueError(f"unsupported tree schema {doc.get('schema')!r}")
        recs = {r["id"]: r for r in doc["nodes"]}
        built = {}
        for i in recs:
            built[i] = Node()
        for i, r in recs.items():
            v = built[i]
            if r["split"] is None:
                v.label = r["label"]
            else:
                sp = r["split"]
                if sp["kind"] not in (LT, EQ):
                    raise ValueError(f"bad split kind {sp['kind']!r}")
                v.split = SplitRule(int(sp["feature"]), float(sp["threshold"]), sp["kind"])
                v.left = built[r["left"]]
                v.right = built[r["right"]]
                v.left.parent = v
                v.right.parent = v
        root = built[doc["root"]]
        # heights, bottom-up
        order = list(iter_nodes(root))
        for v in reversed(order):
            v.height = 0 if v.split is None else 1 + max(v.left.height, v.right.height)
        return cls(root, int(doc["d"]), doc.get("label_type") == "real")

    @classmethod
    def from_json(cls, text: str) -> "DecisionTree":
        return cls.from_dict(json.loads(text))

    def describe(self) -> str:
        lines = []

        def walk(v, depth):
            pad = "  " * depth
            if v.split is None:
                lines.append(f"{pad}-> {v.label!r}")
            else:
                lines.append(f"{pad}{v.split.describe()}?")
                walk(v.right, depth + 1)
                walk(v.left, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines)


def greedy_build(rule: ThresholdRule, S: ExampleMultiset, zeta=None, counter=None) -> DecisionTree:
    """Build GREEDY(S) eagerly. The input multiset is copied, not adopted."""
    if len(S) == 0:
        raise EmptySet("cannot build a tree on an empty set")
    z = rule.root_zeta if zeta is None else zeta
    root = drain(iter_greedy(rule, S.copy(), z), counter)
    return DecisionTree(root, S.dimension(), rule.gain.regression)


def structure(v) -> tuple:
    """Hashable structural signature (splits and labels), for comparisons."""
    if v.split is None:
        return ("leaf", v.label)
    return (tuple(v.split), structure(v.left), structure(v.right))


def breadth_first(root):
    q = deque([(root, 0)])
    while q:
        v, depth = q.popleft()
        yield v, depth
        if v.split is not None:
            q.append((v.left, depth + 1))
            q.append((v.right, depth + 1))
