"""Files written by a benchmark campaign: CSV tables, a text table and figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

OURS = "mr-pouct"
BASELINES = ("nonlearned-myopic", "learned-myopic")


def _columns(table: Sequence[Dict]) -> List[str]:
    cols: List[str] = []
    for row in table:
        for k in row:
            if k not in cols:
                cols.append(k)
    return cols


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def text_table(table: Sequence[Dict]) -> str:
    """Fixed-width table; improvement columns carry a percent sign."""
    if not table:
        return "(no completed trials)\n"
    cols = _columns(table)
    cells = [[c for c in cols]]
    for row in table:
        line = []
        for c in cols:
            v = row.get(c, "")
            s = _fmt(v)
            if c.startswith("improvement") and v != "":
                s += "%"
            line.append(s)
        cells.append(line)
    widths = [max(len(r[i]) for r in cells) for i in range(len(cols))]
    out = []
    for k, r in enumerate(cells):
        out.append("  ".join(s.rjust(w) for s, w in zip(r, widths)).rstrip())
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def write_table_csv(table: Sequence[Dict], path: Path) -> None:
    cols = _columns(table)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, cols, lineterminator="\n")
        w.writeheader()
        for row in table:
            w.writerow({c: _fmt(row.get(c, "")) for c in cols})


def _paired(rows: Sequence[Dict], baseline: str):
    """(baseline time, ours time, size) per trial where both completed."""
    by_key: Dict[tuple, Dict[str, float]] = {}
    for r in rows:
        if r["outcome"] != "completed":
            continue
        key = (r["size"], int(r["robots"]), int(r["trial"]))
        by_key.setdefault(key, {})[r["planner"]] = float(r["time"])
    out = []
    for (size, robots, _), times in sorted(by_key.items()):
        if baseline in times and OURS in times:
            out.append((times[baseline], times[OURS], size, robots))
    return out


def scatter_figure(rows: Sequence[Dict], baseline: str, path: Path) -> bool:
    pts = _paired(rows, baseline)
    if not pts:
        return False
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for size, marker in (("small", "o"), ("medium", "s"), ("large", "^")):
        sel = [p for p in pts if p[2] == size]
        if sel:
            ax.scatter([p[0] for p in sel], [p[1] for p in sel], s=14, marker=marker, alpha=0.7, label=size)
    hi = max(max(p[0], p[1]) for p in pts) * 1.05
    ax.plot([0, hi], [0, hi], color="gray", lw=0.8, ls="--")
    ax.set_xlim(0, hi)
    ax.set_ylim(0, hi)
    ax.set_xlabel(f"{baseline} makespan")
    ax.set_ylabel(f"{OURS} makespan")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def bar_figure(table: Sequence[Dict], path: Path) -> bool:
    if not table:
        return False
    planners = [p for p in (*BASELINES, OURS) if any(p in row for row in table)]
    labels = [f"{row['size']}\n{row['robots']} robot(s)" for row in table]
    width = 0.8 / max(len(planners), 1)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(table)), 3.5))
    for k, p in enumerate(planners):
        xs = [i + (k - (len(planners) - 1) / 2) * width for i in range(len(table))]
        ax.bar(xs, [row.get(p, 0.0) for row in table], width, label=p)
    ax.set_xticks(range(len(table)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("mean makespan")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def write_reports(result, out_dir: Path) -> List[Path]:
    """Write trials.csv, aggregate.csv, aggregate.txt and whatever figures apply."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "trials.csv"
    p.write_text(result.csv())
    written.append(p)
    p = out_dir / "aggregate.csv"
    write_table_csv(result.table, p)
    written.append(p)
    p = out_dir / "aggregate.txt"
    p.write_text(text_table(result.table))
    written.append(p)
    for base in BASELINES:
        p = out_dir / f"scatter_{base}.png"
        if scatter_figure(result.rows, base, p):
            written.append(p)
    p = out_dir / "makespan.png"
    if bar_figure(result.table, p):
        written.append(p)
    return written
