"""Render the aggregated figure series to PNG files.

Each ``figN.json`` written by the aggregation step is turned into one or
two PNGs next to it. Bar figures get both the zoomed axis variant and a
zero-based variant (same data, different y-floor). Rendering is
deterministic: fixed figure geometry, the Agg backend, and no embedded
timestamps or software metadata.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_GENDER_COLORS = {"man": "#4878a8", "woman": "#c06040"}
_METRIC_LABELS = {
    "avg_reward": "average reward",
    "suboptimal_fraction": "fraction of suboptimal recommendations",
}
_SAVEFIG = dict(dpi=150, metadata={"Software": None})


def _render_gender_bars(doc: dict, path: Path, y_floor: float) -> None:
    sets = doc["feature_sets"]
    width = 0.38
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for offset, gender in ((-width / 2, "man"), (width / 2, "woman")):
        series = doc["series"][gender]
        xs = [s + offset for s in range(len(sets))]
        errs = [[m - lo for m, lo in zip(series["mean"], series["ci95_lo"])],
                [hi - m for m, hi in zip(series["mean"], series["ci95_hi"])]]
        ax.bar(xs, series["mean"], width=width, yerr=errs, capsize=3,
               color=_GENDER_COLORS[gender], label=gender)
    ax.set_xticks(range(len(sets)))
    ax.set_xticklabels([f"set {s}" for s in sets])
    ax.set_ylim(bottom=y_floor)
    ax.set_ylabel(_METRIC_LABELS.get(doc["metric"], doc["metric"]))
    ax.set_xlabel("feature set")
    ax.legend(frameon=False)
    ax.set_title(f"{_METRIC_LABELS.get(doc['metric'], doc['metric'])} "
                 f"over {doc['n_runs']} runs (95% CI)")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def _render_cumulative(doc: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.fill_between(doc["x"], doc["min"], doc["max"], alpha=0.25,
                    color="#4878a8", linewidth=0)
    ax.plot(doc["x"], doc["mean"], color="#4878a8")
    ax.set_xlabel("interaction")
    ax.set_ylabel("cumulative fraction of optimal feature set selection")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(f"optimal-set selection over {doc['n_runs']} runs "
                 "(min-to-max band)")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def _render_intervals(doc: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    mids = range(len(doc["intervals"]))
    errs = [[m - lo for m, lo in zip(doc["mean"], doc["min"])],
            [hi - m for m, hi in zip(doc["mean"], doc["max"])]]
    ax.bar(mids, doc["mean"], yerr=errs, capsize=3, color="#4878a8")
    ax.set_xticks(list(mids))
    ax.set_xticklabels([f"{lo / 1000:g}k-{hi / 1000:g}k"
                        for lo, hi in doc["intervals"]], rotation=45,
                       ha="right", fontsize=8)
    ax.set_xlabel("interval")
    ax.set_ylabel("fraction of optimal feature set selection")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(f"per-interval optimal-set selection over {doc['n_runs']} runs "
                 "(min-to-max bars)")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def render_figures(figures_dir: str | Path) -> list[str]:
    """Render every figN.json in the directory; returns the PNG names."""
    figures_dir = Path(figures_dir)
    rendered: list[str] = []
    for json_path in sorted(figures_dir.glob("fig*.json")):
        doc = json.loads(json_path.read_text())
        stem = json_path.stem
        if doc.get("figure") in (1, 2):
            zoomed = figures_dir / f"{stem}.png"
            zero = figures_dir / f"{stem}_zero.png"
            _render_gender_bars(doc, zoomed, doc["axis_variants"]["zoomed"])
            _render_gender_bars(doc, zero, doc["axis_variants"]["zero_based"])
            rendered += [zoomed.name, zero.name]
        elif doc.get("figure") == 3:
            out = figures_dir / f"{stem}.png"
            _render_cumulative(doc, out)
            rendered.append(out.name)
        elif doc.get("figure") == 4:
            out = figures_dir / f"{stem}.png"
            _render_intervals(doc, out)
            rendered.append(out.name)
    return rendered
