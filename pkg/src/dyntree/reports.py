"""JSON / CSV report writers and the run-stream report schema."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

RUN_FORMAT = "dyntree.run/1"


def tree_digest(tree) -> str:
    """sha256 of the canonical tree dump."""
    return hashlib.sha256(tree.to_json().encode()).hexdigest()


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path, rows, columns=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path


def sibling(path, suffix: str, tag: str = "") -> Path:
    """``out.json`` -> ``out<tag><suffix>`` next to it."""
    p = Path(path)
    return p.with_name(p.stem + tag + suffix)


def run_report(m, *, source, params, violations, checks, epsilon) -> dict:
    """Assemble the run-stream report for a finished :class:`Maintainer`."""
    stats = m.stats
    return {
        "format": RUN_FORMAT,
        "input": str(source),
        "params": params,
        "epsilon": epsilon,
        "summary": m.report(),
        "per_update_ops": list(stats.updates.per_update),
        "rebuild_log": [e.as_dict() for e in stats.rebuilds],
        "budget_violations": [
            {"update": u, "depth": dep, "window": w, "ops": used, "tau": tau}
            for u, dep, w, used, tau in stats.budget_violations
        ],
        "verification": {"checks": checks, "violations": violations},
        "tree": {"height": m.height(), "vertices": m.tree.size(),
                 "digest": tree_digest(m.tree)},
    }
