"""Independent reference implementations used to check the fast code paths.

Nothing here reuses the split sweep or the tree builder: split gains are
recomputed from explicit side-membership masks with numpy, routing is done
over arrays, and the reference builder is plain recursion.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import ExampleMultiset
from .errors import EmptySet
from .gains import GainKind, conditional_gain
from .splits import EQ, LT, SplitResult, SplitRule

ZERO_GAIN = 1e-12
MEAN_TOL = 1e-9
_CHUNK = 512


# --------------------------------------------------------------------- arrays
class Arrays(NamedTuple):
    X: np.ndarray  # (m, d) distinct feature vectors
    y: np.ndarray  # (m,) labels
    w: np.ndarray  # (m,) multiplicities
    codes: np.ndarray  # (m,) label index into ``classes``
    classes: np.ndarray


def to_arrays(S) -> Arrays:
    items = list(S.items()) if hasattr(S, "items") else list(S)
    if not items:
        return Arrays(np.zeros((0, 0)), np.zeros(0), np.zeros(0, dtype=np.int64),
                      np.zeros(0, dtype=np.int64), np.zeros(0))
    X = np.array([ex.x for ex, _ in items], dtype=float)
    y = np.array([ex.y for ex, _ in items], dtype=float)
    w = np.array([c for _, c in items], dtype=np.int64)
    classes, codes = np.unique(y, return_inverse=True)
    return Arrays(X, y, w, codes.astype(np.int64), classes)


def _impurity_rows(kind: GainKind, counts, sizes, sums=None, sqs=None):
    """Impurity for each row of side statistics; empty sides give 0."""
    sizes = sizes.astype(float)
    safe = np.where(sizes > 0, sizes, 1.0)
    if kind.name == "gini":
        p = counts / safe[:, None]
        g = 1.0 - (p * p).sum(axis=1)
    elif kind.name == "info":
        p = counts / safe[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        g = t.sum(axis=1)
    else:
        m2 = sqs - sums * sums / safe
        g = 2.0 * np.maximum(m2, 0.0) / safe
    return np.where(sizes > 0, g, 0.0)


def _candidate_gains(kind: GainKind, A: Arrays, idx, masks):
    """Gains of the partitions given by boolean ``masks`` (m_idx, K) over rows ``idx``."""
    w = A.w[idx].astype(float)
    n = w.sum()
    M = masks.astype(float)
    n1 = M.T @ w
    n0 = n - n1
    if kind.name == "var":
        yy = A.y[idx]
        mu = (w * yy).sum() / n
        z = yy - mu
        s_all = (w * z).sum()
        q_all = (w * z * z).sum()
        s1 = M.T @ (w * z)
        q1 = M.T @ (w * z * z)
        g_par = _impurity_rows(kind, None, np.array([n]), np.array([s_all]), np.array([q_all]))[0]
        g1 = _impurity_rows(kind, None, n1, s1, q1)
        g0 = _impurity_rows(kind, None, n0, s_all - s1, q_all - q1)
    else:
        k = len(A.classes)
        W = np.zeros((len(idx), k))
        W[np.arange(len(idx)), A.codes[idx]] = w
        tot = W.sum(axis=0)
        c1 = M.T @ W
        c0 = tot[None, :] - c1
        g_par = _impurity_rows(kind, tot[None, :], np.array([n]))[0]
        g1 = _impurity_rows(kind, c1, n1)
        g0 = _impurity_rows(kind, c0, n0)
    return g_par - (n1 / n) * g1 - (n0 / n) * g0, n1, n0


def _all_candidates(kind: GainKind, A: Arrays, idx):
    """Yield (rule, gain) for every proper candidate, in tie-break order."""
    if len(idx) == 0:
        return
    n = A.w[idx].sum()
    d = A.X.shape[1]
    for j in range(d):
        col = A.X[idx, j]
        u = np.unique(col)
        if len(u) < 2:
            continue
        for kind_s, values in ((LT, u[1:]), (EQ, u)):
            for lo in range(0, len(values), _CHUNK):
                vals = values[lo:lo + _CHUNK]
                if kind_s == LT:
                    masks = col[:, None] < vals[None, :]
                else:
                    masks = col[:, None] == vals[None, :]
                gains, n1, n0 = _candidate_gains(kind, A, idx, masks)
                for t, g, a, b in zip(vals.tolist(), gains.tolist(), n1.tolist(), n0.tolist()):
                    if a <= 0 or b <= 0:
                        continue
                    yield SplitRule(j, t, kind_s), g
    del n


def _sequential_argmax(cands):
    best, best_gain = None, None
    for rule, g in cands:
        if best_gain is None or g > best_gain + 1e-12 * max(1.0, abs(best_gain)):
            best, best_gain = rule, g
    if best is None:
        return None
    return SplitResult(best, max(best_gain, 0.0))


def brute_force_best_split(S, kind: GainKind, _arrays: Arrays | None = None, _idx=None):
    """Exhaustive scan of every (feature, observed value, rule kind)."""
    A = _arrays if _arrays is not None else to_arrays(S)
    idx = np.arange(len(A.w)) if _idx is None else _idx
    if len(idx) == 0 or A.w[idx].sum() == 0:
        raise EmptySet("split search on an empty set")
    return _sequential_argmax(_all_candidates(kind, A, idx))


def naive_best_split(S: ExampleMultiset, kind: GainKind):
    """Pure-Python O(d n^2) scan through :func:`conditional_gain` (small sets only)."""
    if len(S) == 0:
        raise EmptySet("split search on an empty set")
    d = S.dimension()
    n = len(S)
    cands = []
    for j in range(d):
        vals = sorted({ex.x[j] for ex in S})
        for t in vals[1:]:
            r = SplitRule(j, t, LT)
            cands.append((r, conditional_gain(kind, S, r)))
        for t in vals:
            r = SplitRule(j, t, EQ)
            side = sum(c for ex, c in S.items() if ex.x[j] == t)
            if side < n:
                cands.append((r, conditional_gain(kind, S, r)))
    return _sequential_argmax(cands)


def split_gain(kind: GainKind, A: Arrays, idx, rule: SplitRule) -> float:
    col = A.X[idx, rule.feature]
    mask = (col < rule.threshold) if rule.kind == LT else (col == rule.threshold)
    gains, _, _ = _candidate_gains(kind, A, idx, mask[:, None])
    return float(gains[0])


# --------------------------------------------------------------------- routing
def route_indices(root, A: Arrays):
    """Map id(node) -> (node, depth, row indices of examples reaching it)."""
    out = {}
    stack = [(root, 0, np.arange(len(A.w)))]
    while stack:
        v, depth, idx = stack.pop()
        out[id(v)] = (v, depth, idx)
        if v.split is not None:
            s = v.split
            col = A.X[idx, s.feature] if len(idx) else np.zeros(0)
            m = (col < s.threshold) if s.kind == LT else (col == s.threshold)
            stack.append((v.left, depth + 1, idx[~m]))
            stack.append((v.right, depth + 1, idx[m]))
    return out


def route_sets(root, S: ExampleMultiset) -> dict:
    """Map id(node) -> ExampleMultiset of the examples of ``S`` reaching it."""
    out = {}
    stack = [(root, list(S.items()))]
    while stack:
        v, items = stack.pop()
        out[id(v)] = ExampleMultiset(items)
        if v.split is not None:
            left, right = [], []
            for ex, c in items:
                (right if v.split(ex.x) else left).append((ex, c))
            stack.append((v.left, left))
            stack.append((v.right, right))
    return out


# --------------------------------------------------------------------- checks
@dataclass(frozen=True)
class FeasibilityParams:
    alpha: float
    beta: float
    gain: GainKind
    n_max: int = 2
    k_star: int = 0
    h_star: int | None = None

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")

    @property
    def epsilon(self) -> float:
        m = min(self.alpha, self.beta)
        if self.gain.name == "gini":
            return m / 100.0
        if self.gain.name == "info":
            return m / (130.0 * math.log2(max(2, self.n_max)))
        return m / (80.0 * self.gain.c ** 2)


class Violation(NamedTuple):
    vertex: int  # pre-order index
    depth: int
    condition: str
    detail: str

    def as_dict(self):
        return self._asdict()


def _preorder_ids(root):
    ids = {}
    stack = [root]
    while stack:
        v = stack.pop()
        ids[id(v)] = len(ids)
        if v.split is not None:
            stack.append(v.right)
            stack.append(v.left)
    return ids


def _root(T):
    return T.root if hasattr(T, "root") else T


def check_feasibility(T, S: ExampleMultiset, p: FeasibilityParams) -> list:
    """All violations of the three feasibility conditions (empty list = feasible).

    Vertices whose current set is empty are not checked. Vertices at depth
    ``>= h_star`` must be leaves; vertices with ``|S(T,v)| <= k_star`` are
    exempt from being forced internal.
    """
    root = _root(T)
    A = to_arrays(S)
    ids = _preorder_ids(root)
    routed = route_indices(root, A)
    out = []
    for key, (v, depth, idx) in routed.items():
        vid = ids[key]
        if len(idx) == 0:
            continue
        n_v = int(A.w[idx].sum())
        pruned_depth = p.h_star is not None and depth >= p.h_star
        if pruned_depth and v.split is not None:
            out.append(Violation(vid, depth, "depth", f"internal vertex at depth {depth}"))
        res = _sequential_argmax(_all_candidates(p.gain, A, idx))
        gmax = 0.0 if res is None else res.gain
        if gmax <= ZERO_GAIN and v.split is not None:
            out.append(Violation(vid, depth, "zero-gain-internal",
                                 f"max gain {gmax:.3g} but vertex splits"))
        exempt = pruned_depth or n_v <= p.k_star
        if gmax >= p.alpha and v.split is None and not exempt:
            out.append(Violation(vid, depth, "high-gain-leaf",
                                 f"max gain {gmax:.6f} >= alpha {p.alpha} at a leaf (n={n_v})"))
        if v.split is not None:
            g = split_gain(p.gain, A, idx, v.split)
            if g < gmax - p.beta - 1e-12:
                out.append(Violation(vid, depth, "suboptimal-split",
                                     f"gain {g:.6f} < max {gmax:.6f} - beta {p.beta}"))
        else:
            out.extend(_check_label(p.gain, A, idx, v, vid, depth))
    return sorted(out)


def _check_label(kind: GainKind, A: Arrays, idx, v, vid, depth):
    w = A.w[idx]
    if kind.regression:
        mean = float((w * A.y[idx]).sum() / w.sum())
        try:
            ok = abs(float(v.label) - mean) <= MEAN_TOL * max(1.0, abs(mean))
        except (TypeError, ValueError):
            ok = False
        if not ok:
            return [Violation(vid, depth, "label", f"label {v.label!r} is not the mean {mean:.12g}")]
        return []
    counts = np.bincount(A.codes[idx], weights=w, minlength=len(A.classes))
    best = counts.max()
    modes = {float(c) for c, k in zip(A.classes, counts) if k == best}
    try:
        ok = float(v.label) in modes
    except (TypeError, ValueError):
        ok = False
    if not ok:
        return [Violation(vid, depth, "label", f"label {v.label!r} is not a mode {sorted(modes)}")]
    return []


def gain_approx_slack(kind: GainKind, epsilon: float, n: int) -> float:
    if kind.name == "gini":
        return 96.0 * epsilon
    if kind.name == "info":
        return 120.0 * epsilon * math.log2(max(2, n))
    return 72.0 * kind.c ** 2 * epsilon


def check_gain_approx(T, S: ExampleMultiset, kind: GainKind, epsilon: float) -> list:
    """Every internal vertex's split is within the approximation slack of the best."""
    root = _root(T)
    A = to_arrays(S)
    ids = _preorder_ids(root)
    out = []
    for key, (v, depth, idx) in route_indices(root, A).items():
        if v.split is None or len(idx) == 0:
            continue
        res = _sequential_argmax(_all_candidates(kind, A, idx))
        gmax = 0.0 if res is None else res.gain
        g = split_gain(kind, A, idx, v.split)
        n_v = int(A.w[idx].sum())
        slack = gain_approx_slack(kind, epsilon, n_v)
        if g < gmax - slack - 1e-12:
            out.append(Violation(ids[key], depth, "gain-approx",
                                 f"gain {g:.6f} < max {gmax:.6f} - {slack:.6f}"))
    return sorted(out)


def height_bound(n: int, gamma: float, epsilon: float) -> float:
    q = gamma - 2 * epsilon
    if n <= 1:
        return 1.0
    return math.log(n) / math.log(1.0 / (1.0 - q)) + 1.0


def check_height(T, S: ExampleMultiset, gamma: float, epsilon: float) -> list:
    """Child-size lower bound at every internal edge plus the overall height bound."""
    if not gamma > 2 * epsilon:
        raise ValueError("check_height needs gamma > 2 * epsilon")
    root = _root(T)
    A = to_arrays(S)
    ids = _preorder_ids(root)
    routed = route_indices(root, A)
    q = gamma - 2 * epsilon
    out = []
    for key, (v, depth, idx) in routed.items():
        if v.split is None:
            continue
        n_v = int(A.w[idx].sum())
        for child in (v.left, v.right):
            n_c = int(A.w[routed[id(child)][2]].sum())
            if n_c < q * n_v - 1e-9:
                out.append(Violation(ids[key], depth, "child-size",
                                     f"child has {n_c} of {n_v} (< {q:.4f} fraction)"))
    h = max(depth for (_, depth, _) in routed.values()) if routed else 0
    hb = height_bound(int(A.w.sum()), gamma, epsilon)
    if h > hb:
        out.append(Violation(0, 0, "height", f"height {h} > bound {hb:.2f}"))
    return sorted(out)


# --------------------------------------------------------------------- reference build
class RefNode:
    __slots__ = ("split", "label", "left", "right", "height")

    def __init__(self, split=None, label=None, left=None, right=None):
        self.split, self.label, self.left, self.right = split, label, left, right
        self.height = 0 if split is None else 1 + max(left.height, right.height)


def _ref_label(kind: GainKind, A: Arrays, idx):
    w = A.w[idx]
    if kind.regression:
        return float((w * A.y[idx]).sum() / w.sum())
    counts = np.bincount(A.codes[idx], weights=w, minlength=len(A.classes))
    c = A.classes[int(np.argmax(counts))]  # argmax takes the first, i.e. smallest label
    return int(c) if float(c).is_integer() else float(c)


def reference_greedy(rule, S: ExampleMultiset, zeta=None):
    """Direct recursive greedy construction using the brute-force split search."""
    if len(S) == 0:
        raise EmptySet("cannot build a tree on an empty set")
    A = to_arrays(S)
    z0 = rule.root_zeta if zeta is None else zeta

    def build(idx, z):
        n = int(A.w[idx].sum())
        label = _ref_label(rule.gain, A, idx)
        if z <= 0 or n <= rule.k_star:
            return RefNode(label=label)
        res = _sequential_argmax(_all_candidates(rule.gain, A, idx))
        if res is None or res.gain < rule.alpha:
            return RefNode(label=label)
        col = A.X[idx, res.rule.feature]
        m = (col < res.rule.threshold) if res.rule.kind == LT else (col == res.rule.threshold)
        return RefNode(res.rule, None, build(idx[~m], z - 1), build(idx[m], z - 1))

    return build(np.arange(len(A.w)), z0)


def ref_structure(v) -> tuple:
    if v.split is None:
        return ("leaf", v.label)
    return (tuple(v.split), ref_structure(v.left), ref_structure(v.right))


def structures_match(a, b, tol=1e-9) -> bool:
    """Compare two trees (any node type with split/label/left/right)."""
    stack = [(a, b)]
    while stack:
        u, v = stack.pop()
        if (u.split is None) != (v.split is None):
            return False
        if u.split is None:
            lu, lv = u.label, v.label
            if isinstance(lu, float) or isinstance(lv, float):
                if abs(float(lu) - float(lv)) > tol * max(1.0, abs(float(lu))):
                    return False
            elif lu != lv:
                return False
            continue
        if tuple(u.split) != tuple(v.split):
            return False
        stack.append((u.left, v.left))
        stack.append((u.right, v.right))
    return True


# --------------------------------------------------------------------- delayed-rebuild audit
class RoundAudit:
    """Round-boundary hook for :class:`~dyntree.delayed.DelayApx` instances.

    At boundary ``i`` it checks, for every vertex, ``c(v) <= eps_adj * n(v at
    creation)`` and (when ``exact``) that each stored multiset equals the
    examples of ``S + U[:t_i]`` routed to that vertex. Work done here is not
    charged to the instance.
    """

    def __init__(self, exact: bool = True):
        self.exact = exact
        self.failures = []
        self.boundaries = 0
        self._bases = weakref.WeakKeyDictionary()  # ids get reused once instances die

    def __call__(self, inst, i):
        from .tree import iter_nodes

        self.boundaries += 1
        eps = inst.schedule.epsilon_adj
        for v in iter_nodes(inst.root):
            if v.c > eps * v.n_created + 1e-9:
                self.failures.append((id(inst), i, "counter", v.c, eps * v.n_created))
        if not self.exact:
            return
        key = id(inst)
        if inst not in self._bases:
            self._bases[inst] = ExampleMultiset(inst.root.data.items()) if i == 0 else None
        base = self._bases[inst]
        if base is None:
            return
        target = base.copy()
        for u in inst.buffer[:inst.schedule.t[i]]:
            target.apply(u)
        routed = route_sets(inst.root, target)
        for v in iter_nodes(inst.root):
            if routed[id(v)] != v.data:
                self.failures.append((key, i, "stored-set", len(v.data), len(routed[id(v)])))
                break
