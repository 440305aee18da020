"""JSONL update streams and seeded synthetic stream generators.

Stream files start with a header object::

    {"format": "dyntree.stream/1", "d": 2, "label_type": "class", "c": null, "n_max": 2000}

followed by one request per line: ``{"op": "ins", "x": [0.1, 2.0], "y": 1}``.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field

from .core import Example, ExampleMultiset, Op, UpdateRequest, make_example
from .errors import DyntreeError, StreamFormatError

STREAM_FORMAT = "dyntree.stream/1"


@dataclass
class StreamHeader:
    d: int
    label_type: str = "class"  # or "real"
    c: float | None = None
    n_max: int | None = None

    def as_dict(self):
        return {"format": STREAM_FORMAT, "d": self.d, "label_type": self.label_type,
                "c": self.c, "n_max": self.n_max}


@dataclass
class Stream:
    header: StreamHeader
    requests: list = field(default_factory=list)

    def final_set(self) -> ExampleMultiset:
        S = ExampleMultiset()
        for i, u in enumerate(self.requests):
            S.apply(u, index=i)
        return S

    def max_active(self) -> int:
        n = best = 0
        for u in self.requests:
            n += u.sign
            best = max(best, n)
        return best


def _parse_label(y, label_type, line):
    if label_type == "class":
        if isinstance(y, bool) or not isinstance(y, (int, float)) or float(y) != int(y):
            raise StreamFormatError(f"class label must be an integer, got {y!r}", line)
        return int(y)
    if not isinstance(y, (int, float)) or isinstance(y, bool) or math.isnan(y):
        raise StreamFormatError(f"real label expected, got {y!r}", line)
    return float(y)


def parse_stream(lines, strict: bool = True) -> Stream:
    """Parse JSONL text lines. With ``strict`` every prefix must be a valid active set."""
    it = iter(enumerate(lines, start=1))
    header = None
    for ln, raw in it:
        if raw.strip():
            try:
                h = json.loads(raw)
            except json.JSONDecodeError as e:
                raise StreamFormatError(f"bad header JSON: {e.msg}", ln) from None
            if not isinstance(h, dict) or "d" not in h:
                raise StreamFormatError("header must be an object with 'd'", ln)
            if h.get("format", STREAM_FORMAT) != STREAM_FORMAT:
                raise StreamFormatError(f"unknown stream format {h.get('format')!r}", ln)
            lt = h.get("label_type", "class")
            if lt not in ("class", "real"):
                raise StreamFormatError(f"label_type must be class or real, got {lt!r}", ln)
            try:
                header = StreamHeader(int(h["d"]), lt, h.get("c"), h.get("n_max"))
            except (TypeError, ValueError):
                raise StreamFormatError("header 'd' must be an integer", ln) from None
            if header.d < 1:
                raise StreamFormatError("d must be at least 1", ln)
            break
    if header is None:
        raise StreamFormatError("empty stream file", 1)
    reqs = []
    active = ExampleMultiset() if strict else None
    for ln, raw in it:
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise StreamFormatError(f"bad JSON: {e.msg}", ln) from None
        if not isinstance(rec, dict):
            raise StreamFormatError("record must be an object", ln)
        op = rec.get("op")
        if op not in ("ins", "del"):
            raise StreamFormatError(f"op must be 'ins' or 'del', got {op!r}", ln)
        x = rec.get("x")
        if not isinstance(x, list):
            raise StreamFormatError("'x' must be a list", ln)
        if "y" not in rec:
            raise StreamFormatError("missing label 'y'", ln)
        y = _parse_label(rec["y"], header.label_type, ln)
        try:
            ex = make_example(x, y, header.d)
        except (DyntreeError, TypeError, ValueError) as e:
            raise StreamFormatError(str(e), ln) from None
        u = UpdateRequest(ex, Op(op))
        if active is not None:
            if u.op is Op.DEL and ex not in active:
                raise StreamFormatError(f"delete of absent example x={list(ex.x)} y={ex.y}", ln)
            active.apply(u)
        reqs.append(u)
    return Stream(header, reqs)


def read_stream(path, strict: bool = True) -> Stream:
    with open(path) as fh:
        return parse_stream(fh, strict)


def _num(v):
    return int(v) if float(v).is_integer() and abs(v) < 2**53 else v


def format_stream(stream: Stream) -> str:
    out = [json.dumps(stream.header.as_dict())]
    for u in stream.requests:
        ex = u.example
        out.append(json.dumps({"op": u.op.value, "x": [_num(v) for v in ex.x], "y": ex.y}))
    return "\n".join(out) + "\n"


def write_stream(stream: Stream, path):
    with open(path, "w") as fh:
        fh.write(format_stream(stream))


def convert_csv(path, label_column: str | int = -1, label_type: str = "class") -> Stream:
    """Pure-insert stream from a CSV file with a header row."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise StreamFormatError("empty CSV file", 1)
    head, body = rows[0], rows[1:]
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        try:
            li = head.index(label_column)
        except ValueError:
            raise StreamFormatError(f"no column named {label_column!r}", 1) from None
    else:
        li = int(label_column) % len(head)
    reqs = []
    for ln, row in enumerate(body, start=2):
        if not row:
            continue
        if len(row) != len(head):
            raise StreamFormatError(f"expected {len(head)} fields, got {len(row)}", ln)
        try:
            x = [float(v) for i, v in enumerate(row) if i != li]
            y = _parse_label(float(row[li]), label_type, ln)
            reqs.append(UpdateRequest(make_example(x, y), Op.INS))
        except ValueError as e:
            raise StreamFormatError(str(e), ln) from None
    return Stream(StreamHeader(len(head) - 1, label_type, None, len(reqs)), reqs)


# --------------------------------------------------------------------- generators
def _clusters_point(rng, d, r):
    y = rng.randint(0, 1)
    centre = 1.0 if y else -1.0
    x = [round(rng.gauss(centre, 0.6), r) for _ in range(d)]
    return x, y


def _checker_point(rng, d, r):
    x = [round(rng.uniform(0, 2), r) for _ in range(d)]
    cell = int(min(x[0], 1.99) >= 1.0) * 2 + int(min(x[1 % d], 1.99) >= 1.0)
    y = cell if rng.random() >= 0.05 else rng.randint(0, 3)
    return x, y


def _regression_point(rng, d, c, r):
    x = [round(rng.uniform(0, 4), r) for _ in range(d)]
    level = (0.8 if x[0] < 2 else -0.6) + (0.3 if x[1 % d] < 1 else -0.1)
    y = max(-c, min(c, level + rng.gauss(0, 0.1)))
    return x, round(y, 4)


def _point(rng, kind, d, c, r=1):
    if kind == "clusters":
        return _clusters_point(rng, d, r)
    if kind == "checkerboard":
        return _checker_point(rng, d, r)
    if kind == "regression":
        return _regression_point(rng, d, c, r)
    raise ValueError(f"unknown generator {kind!r}")


GENERATORS = ("clusters", "checkerboard", "regression", "hot-leaf")


def generate(kind: str, n_updates: int, *, d: int = 2, seed: int = 0, p_insert: float = 0.7,
             warmup: int | None = None, c: float = 1.0, decimals: int = 1) -> Stream:
    """Seeded mixed insert/delete stream.

    The first ``warmup`` requests are inserts; afterwards each request is an
    insert with probability ``p_insert`` and otherwise deletes a uniformly
    random active example. ``hot-leaf`` inserts into one tiny corner box and
    deletes earlier hot points, concentrating work on a single leaf. Feature
    values are rounded to ``decimals`` places (coarse grids give duplicates).
    """
    rng = random.Random(seed)
    if warmup is None:
        warmup = min(n_updates, max(32, n_updates // 4))
    active = []  # list of examples (multiset via repeats)
    reqs = []
    hot = []
    regression = kind == "regression"
    base_kind = "clusters" if kind == "hot-leaf" else kind
    for i in range(n_updates):
        if kind == "hot-leaf" and i >= warmup:
            if hot and i % 2 == 1:
                j = rng.randrange(len(hot))
                ex = hot.pop(j)
                active.remove(ex)
                reqs.append(UpdateRequest(ex, Op.DEL))
            else:
                x = [round(3.0 + rng.uniform(0, 0.2), decimals) for _ in range(d)]
                ex = make_example(x, 1)
                hot.append(ex)
                active.append(ex)
                reqs.append(UpdateRequest(ex, Op.INS))
            continue
        if i < warmup or not active or rng.random() < p_insert:
            x, y = _point(rng, base_kind, d, c, decimals)
            ex = make_example(x, y)
            active.append(ex)
            reqs.append(UpdateRequest(ex, Op.INS))
        else:
            j = rng.randrange(len(active))
            active[j], active[-1] = active[-1], active[j]
            ex = active.pop()
            reqs.append(UpdateRequest(ex, Op.DEL))
    st = Stream(StreamHeader(d, "real" if regression else "class",
                             c if regression else None, None), reqs)
    st.header.n_max = st.max_active()
    return st


def base_set(kind: str, n: int, *, d: int = 2, seed: int = 0, c: float = 1.0,
             decimals: int = 1) -> ExampleMultiset:
    """``n`` i.i.d. points from a generator's base distribution."""
    rng = random.Random(seed)
    base_kind = "clusters" if kind == "hot-leaf" else kind
    S = ExampleMultiset()
    for _ in range(n):
        x, y = _point(rng, base_kind, d, c, decimals)
        S.add(make_example(x, y))
    return S


def update_tail(kind: str, S: ExampleMultiset, m: int, *, d: int = 2, seed: int = 0,
                p_insert: float = 0.5, c: float = 1.0, decimals: int = 1) -> list:
    """``m`` requests continuing from active set ``S`` (which is not modified)."""
    rng = random.Random(seed)
    active = list(S.elements())
    base_kind = "clusters" if kind == "hot-leaf" else kind
    hot = []
    reqs = []
    for i in range(m):
        if kind == "hot-leaf":
            if hot and i % 2 == 1:
                ex = hot.pop(rng.randrange(len(hot)))
                reqs.append(UpdateRequest(ex, Op.DEL))
            else:
                x = [round(3.0 + rng.uniform(0, 0.2), decimals) for _ in range(d)]
                ex = make_example(x, 1)
                hot.append(ex)
                reqs.append(UpdateRequest(ex, Op.INS))
            continue
        if not active or rng.random() < p_insert:
            x, y = _point(rng, base_kind, d, c, decimals)
            ex = make_example(x, y)
            active.append(ex)
            reqs.append(UpdateRequest(ex, Op.INS))
        else:
            j = rng.randrange(len(active))
            active[j], active[-1] = active[-1], active[j]
            reqs.append(UpdateRequest(active.pop(), Op.DEL))
    return reqs


def example_of(x, y) -> Example:
    return make_example(x, y)
