"""Per-language summary table and figures over the slices of a dataset."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .export import DatasetLayout, format_real, read_network_json  # noqa: E402

SUMMARY_COLUMNS = (
    "slice_index",
    "start",
    "end",
    "commit_count",
    "author_count",
    "project_count",
    "contribution_count",
    "collaboration_count",
    "contribution_density",
    "collaboration_density",
    "largest_component_size",
    "largest_component_fraction",
    "file_threshold",
    "files_discarded",
)

# PNG metadata would otherwise embed the matplotlib version
_PNG_META = {"Software": None}


def load_networks(layout: DatasetLayout) -> list[dict]:
    rows = []
    for path in sorted(layout.dir.glob("network_*.json")):
        m, s, f = read_network_json(path)
        rows.append(
            {
                "slice_index": s.index,
                "start": s.start_time,
                "end": s.end_time,
                "commit_count": s.commit_count,
                "author_count": m.author_count,
                "project_count": m.project_count,
                "contribution_count": m.contribution_count,
                "collaboration_count": m.collaboration_count,
                "contribution_density": m.contribution_density,
                "collaboration_density": m.collaboration_density,
                "largest_component_size": m.largest_component_size,
                "largest_component_fraction": m.largest_component_fraction,
                "file_threshold": f.threshold_author_count,
                "files_discarded": f.files_discarded,
            }
        )
    rows.sort(key=lambda r: r["slice_index"])
    return rows


def write_summary(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            cells = [format_real(v) if isinstance(v, float) else str(v) for v in (r[c] for c in SUMMARY_COLUMNS)]
            fh.write("\t".join(cells) + "\n")


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def plot_counts(rows, path, language):
    x = [r["slice_index"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for key, label in (
        ("author_count", "authors"),
        ("project_count", "projects"),
        ("contribution_count", "contributions"),
        ("collaboration_count", "collaborations"),
    ):
        ax.plot(x, [max(r[key], 1) for r in rows], marker="o", ms=3, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("slice")
    ax.set_ylabel("count")
    ax.set_title(f"{language}: network size per slice")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_connectivity(rows, path, language):
    x = [r["slice_index"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.plot(x, [r["contribution_density"] for r in rows], marker="o", ms=3, label="contribution")
    ax1.plot(x, [r["collaboration_density"] for r in rows], marker="s", ms=3, label="collaboration")
    ax1.set_yscale("log")
    ax1.set_xlabel("slice")
    ax1.set_ylabel("density")
    ax1.legend(fontsize=8)
    ax2.plot(x, [r["largest_component_fraction"] for r in rows], marker="o", ms=3, color="C3")
    ax2.set_ylim(0, 1)
    ax2.set_xlabel("slice")
    ax2.set_ylabel("largest component fraction")
    fig.suptitle(f"{language}: connectivity")
    _save(fig, path)


def plot_components(sizes: list[list[int]], path, language):
    fig, ax = plt.subplots(figsize=(5, 4))
    picks = sorted({0, len(sizes) // 2, len(sizes) - 1}) if sizes else []
    for i in picks:
        s = sizes[i]
        if s:
            ax.loglog(range(1, len(s) + 1), s, marker=".", ls="none", label=f"slice {i}")
    ax.set_xlabel("component rank")
    ax.set_ylabel("component size")
    ax.set_title(f"{language}: component sizes")
    if picks:
        ax.legend(fontsize=8)
    _save(fig, path)


def render_report(root, language: str, out_dir=None) -> list[Path]:
    """Write ``summary.tsv`` and PNG figures; returns the written paths."""
    layout = DatasetLayout(root, language)
    rows = load_networks(layout)
    if not rows:
        raise FileNotFoundError(f"no network_*.json files under {layout.dir}")
    out = Path(out_dir) if out_dir else layout.dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "summary.tsv", out / "counts.png", out / "connectivity.png"]
    write_summary(rows, written[0])
    plot_counts(rows, written[1], language)
    plot_connectivity(rows, written[2], language)
    if layout.components_json.exists():
        sizes = json.loads(layout.components_json.read_text(encoding="utf-8"))
        written.append(out / "components.png")
        plot_components(sizes, written[-1], language)
    return written
