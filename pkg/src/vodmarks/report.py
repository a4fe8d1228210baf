"""Evaluation reports: per-video precision, corpus averages, CSV, and figures.

The eval path consumes extraction results (windows, dot positions, refined
spans) plus ground-truth labels and emits three artifacts side by side:
report.json with per-video and corpus numbers, precision_vs_k.csv with one
row per (video, k), and precision_vs_k.png plotting the corpus curves.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import chat_precision_at_k, video_precision_end, video_precision_start
from .types import GroundTruth, HighlightSpan, PrecisionReport, Window

CSV_FIELDS = ["video_id", "k", "chat_precision", "video_precision_start", "video_precision_end"]


@dataclass(frozen=True)
class ExtractionItem:
    """One red dot's evaluable outputs."""

    red_dot_id: str
    position_s: float
    window: Window | None = None
    span: HighlightSpan | None = None
    probability: float = 0.0
    state: str = "initial"

    def to_dict(self) -> dict[str, Any]:
        return {
            "red_dot_id": self.red_dot_id,
            "position_s": self.position_s,
            "probability": self.probability,
            "state": self.state,
            "window": (
                {"start_s": self.window.start_s, "end_s": self.window.end_s}
                if self.window
                else None
            ),
            "span": self.span.to_dict() if self.span else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExtractionItem":
        window = None
        if d.get("window"):
            window = Window(start_s=float(d["window"]["start_s"]), end_s=float(d["window"]["end_s"]))
        span = HighlightSpan.from_dict(d["span"]) if d.get("span") else None
        return cls(
            red_dot_id=str(d["red_dot_id"]),
            position_s=float(d["position_s"]),
            window=window,
            span=span,
            probability=float(d.get("probability", 0.0)),
            state=str(d.get("state", "initial")),
        )


@dataclass(frozen=True)
class ExtractionResult:
    """All evaluable outputs for one video, in selection order."""

    video_id: str
    items: tuple[ExtractionItem, ...] = field(default=())

    def to_dict(self) -> dict[str, Any]:
        return {"video_id": self.video_id, "items": [i.to_dict() for i in self.items]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExtractionResult":
        return cls(
            video_id=str(d["video_id"]),
            items=tuple(ExtractionItem.from_dict(i) for i in d.get("items", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExtractionResult":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def precision_at(result: ExtractionResult, truth: GroundTruth, k: int) -> PrecisionReport:
    """Score the first k items of one video under all three metrics.

    Items come in selection (descending-probability) order, so the first k
    are the top k. Missing windows or spans count as misses: the denominator
    is always k.
    """
    top = result.items[:k]
    windows = [i.window for i in top if i.window is not None]
    positions = [i.position_s for i in top]
    ends = [i.span.end_s for i in top if i.span is not None]
    return PrecisionReport(
        k=k,
        chat_precision=chat_precision_at_k(windows, truth, k=k),
        video_precision_start=video_precision_start(positions, truth, k=k),
        video_precision_end=video_precision_end(ends, truth, k=k),
    )


def precision_rows(
    pairs: Sequence[tuple[ExtractionResult, GroundTruth]], ks: Sequence[int]
) -> list[dict[str, Any]]:
    """Per-video rows for every k, followed by corpus-average rows."""
    rows: list[dict[str, Any]] = []
    for result, truth in pairs:
        for k in ks:
            rep = precision_at(result, truth, k)
            rows.append({"video_id": result.video_id, **rep.to_dict()})
    for k in ks:
        k_rows = [r for r in rows if r["k"] == k and r["video_id"] != "corpus-average"]
        if k_rows:
            rows.append(
                {
                    "video_id": "corpus-average",
                    "k": k,
                    "chat_precision": sum(r["chat_precision"] for r in k_rows) / len(k_rows),
                    "video_precision_start": sum(r["video_precision_start"] for r in k_rows)
                    / len(k_rows),
                    "video_precision_end": sum(r["video_precision_end"] for r in k_rows)
                    / len(k_rows),
                }
            )
    return rows


def write_rows_csv(path: str | Path, rows: Sequence[dict[str, Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in CSV_FIELDS})


def render_precision_figure(path: str | Path, rows: Sequence[dict[str, Any]]) -> None:
    """Plot the corpus-average precision curves against k."""
    avg = sorted((r for r in rows if r["video_id"] == "corpus-average"), key=lambda r: r["k"])
    ks = [r["k"] for r in avg]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(ks, [r["chat_precision"] for r in avg], marker="o", label="chat precision")
    ax.plot(
        ks, [r["video_precision_start"] for r in avg], marker="s", label="video precision (start)"
    )
    ax.plot(ks, [r["video_precision_end"] for r in avg], marker="^", label="video precision (end)")
    ax.set_xlabel("k")
    ax.set_ylabel("precision")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower left")
    ax.set_title("Precision at k, corpus average")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def evaluate_and_report(
    pairs: Sequence[tuple[ExtractionResult, GroundTruth]],
    out_dir: str | Path,
    ks: Sequence[int],
) -> dict[str, Any]:
    """Run the full report path and return the summary written to report.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = precision_rows(pairs, ks)
    write_rows_csv(out / "precision_vs_k.csv", rows)
    render_precision_figure(out / "precision_vs_k.png", rows)
    summary = {
        "videos": sorted({r.video_id for r, _ in pairs}),
        "ks": list(ks),
        "rows": rows,
        "corpus_average": [r for r in rows if r["video_id"] == "corpus-average"],
    }
    (out / "report.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary
