"""Demand report outputs: aligned text, CSV, and a seats-filled chart.

The chart is a horizontal bar per section (enrolled over capacity) with
the term's minimum-enrollment threshold marked; below-threshold sections
are drawn in the warning colour.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .offering import DemandRow  # noqa: E402

CSV_HEADER = ["course_code", "section_id", "class_label", "enrolled",
              "capacity", "fill_ratio", "below_threshold"]


def demand_to_csv(rows: Iterable[DemandRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.course_code, r.section_id, r.class_label, r.enrolled,
                         r.capacity, f"{r.fill_ratio:.4f}", str(r.below_threshold).lower()])
    return buf.getvalue()


def write_demand_csv(rows: Iterable[DemandRow], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(demand_to_csv(rows), encoding="utf-8")
    return path


def demand_table(rows: Iterable[DemandRow]) -> str:
    """Plain aligned text for terminal output."""
    rows = list(rows)
    out = [f"{'COURSE':<10}{'CLASS':<7}{'SECTION':<16}{'ENROLLED':>9}{'CAP':>6}{'FILL':>7}  FLAG"]
    for r in rows:
        flag = "LOW" if r.below_threshold else ""
        out.append(
            f"{r.course_code:<10}{r.class_label:<7}{r.section_id:<16}"
            f"{r.enrolled:>9}{r.capacity:>6}{r.fill_ratio:>7.2f}  {flag}"
        )
    if not rows:
        out.append("(no sections)")
    return "\n".join(out)


def render_demand_chart(rows: Iterable[DemandRow], path: str | Path,
                        threshold: int, term_code: str = "") -> Path:
    """Render the enrolled-per-section bar chart to an image file."""
    rows = list(rows)
    path = Path(path)
    labels = [f"{r.course_code}-{r.class_label}" for r in rows]
    enrolled = [r.enrolled for r in rows]
    capacity = [r.capacity for r in rows]
    colors = ["#c0392b" if r.below_threshold else "#2d6a9f" for r in rows]

    height = max(2.5, 0.4 * len(rows) + 1.5)
    fig, ax = plt.subplots(figsize=(8, height))
    y = range(len(rows))
    ax.barh(y, capacity, color="#e6e6e6", label="capacity")
    ax.barh(y, enrolled, color=colors, label="enrolled")
    ax.axvline(threshold, color="#555555", linestyle="--", linewidth=1,
               label=f"min enrollment ({threshold})")
    ax.set_yticks(list(y))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("students")
    title = "Section demand"
    if term_code:
        title += f", term {term_code}"
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
