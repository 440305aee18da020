"""PNG figures for the CLI reports (matplotlib, headless)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_scaling(table, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for g in dict.fromkeys(r["generator"] for r in table):
        rows = [r for r in table if r["generator"] == g]
        ns = [r["n"] for r in rows]
        line, = ax.plot(ns, [r["max_ops"] for r in rows], marker="o", label=f"{g} dynamic")
        ax.plot(ns, [r["naive_ops"] for r in rows], ls="--", marker="x",
                color=line.get_color(), label=f"{g} full rebuild")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("active set size n")
    ax.set_ylabel("max ops per update")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_ops(per_update, path):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(range(1, len(per_update) + 1), per_update, lw=0.7)
    ax.set_yscale("symlog")
    ax.set_xlabel("update")
    ax.set_ylabel("ops")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path
