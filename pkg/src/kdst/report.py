"""Summaries and figures from an experiment CSV."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path


def load_rows(csv_path) -> list[dict]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _floats(rows, key):
    out = []
    for r in rows:
        v = r.get(key, "")
        if v not in ("", None):
            out.append(float(v))
    return out


def _stats(xs):
    if not xs:
        return "-", "-"
    return f"{sum(xs) / len(xs):.4f}", f"{max(xs):.4f}"


def summarize(rows: list[dict]) -> str:
    """Plain-text table, one line per algorithm."""
    by_algo: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        by_algo[r["algorithm"]].append(r)
    header = ["algorithm", "runs", "ok", "feasible", "mean ratio_lp", "max ratio_lp",
              "mean ratio_opt", "max ratio_opt", "mean restarts"]
    table = [header]
    for algo in sorted(by_algo):
        rs = by_algo[algo]
        ok = sum(r["status"] == "ok" for r in rs)
        feas = sum(r.get("feasible") == "1" for r in rs)
        rl = _stats(_floats(rs, "ratio_lp"))
        ro = _stats(_floats(rs, "ratio_opt"))
        restarts = _floats(rs, "restarts")
        mr = f"{sum(restarts) / len(restarts):.2f}" if restarts else "-"
        table.append([algo, str(len(rs)), str(ok), str(feas), *rl, *ro, mr])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_figures(rows: list[dict], out_dir) -> list[Path]:
    """Write PNG figures next to the CSV; matplotlib is imported lazily."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    by_algo: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        by_algo[r["algorithm"]].append(r)

    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, rs in sorted(by_algo.items()):
        xs = _floats(rs, "ratio_lp")
        if xs:
            ax.hist(xs, bins=min(20, max(5, int(math.sqrt(len(xs))))), alpha=0.6, label=algo)
    ax.set_xlabel("cost / LP value")
    ax.set_ylabel("runs")
    ax.legend(frameon=False)
    fig.tight_layout()
    p = out_dir / "ratio_lp_hist.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(5, 5))
    hi = 0.0
    for algo, rs in sorted(by_algo.items()):
        pts = [(float(r["lp_value"]), float(r["algorithm_cost"])) for r in rs
               if r.get("lp_value") and r.get("algorithm_cost")]
        if pts:
            ax.scatter(*zip(*pts), s=14, label=algo)
            hi = max(hi, max(max(p) for p in pts))
    if hi:
        ax.plot([0, hi], [0, hi], color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("LP value")
    ax.set_ylabel("solution cost")
    ax.legend(frameon=False)
    fig.tight_layout()
    p = out_dir / "cost_vs_lp.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    opt_rows = [r for r in rows if r.get("ratio_opt")]
    if opt_rows:
        fig, ax = plt.subplots(figsize=(6, 4))
        algos = sorted({r["algorithm"] for r in opt_rows})
        ax.boxplot([_floats([r for r in opt_rows if r["algorithm"] == a], "ratio_opt") for a in algos])
        ax.set_xticks(range(1, len(algos) + 1), algos)
        ax.set_ylabel("cost / exact optimum")
        fig.tight_layout()
        p = out_dir / "ratio_opt_box.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        written.append(p)
    return written
