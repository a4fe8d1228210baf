"""Window scoring and red-dot placement.

The placement pipeline: score every chat window with a logistic model over
three burst features, keep the top k well-separated windows, locate the
message peak inside each, and back the peak off by a learned constant to
land near the highlight's start. Chat reacts to a highlight a couple dozen
seconds after it happens, which is exactly what the constant compensates for.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .chat_ingest import build_windows
from .logistic import LogisticModel, train_logistic
from .types import (
    ChatMessage,
    ConfigError,
    GroundTruth,
    HighlightSpan,
    RedDot,
    RedDotState,
    VideoMeta,
    Window,
    spans_overlap,
)

logger = logging.getLogger(__name__)

SMOOTH_WIDTH_BINS = 5
# Grid of candidate peak-to-start shifts, in whole seconds.
MAX_ADJUSTMENT_S = 60
# A dot this far before a span's start still catches the highlight.
START_TOLERANCE_S = 10.0
# Chat reacting to a highlight is expected within this horizon past its end.
REACTION_HORIZON_S = 60.0


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokenization; punctuation stays glued to words."""
    return text.lower().split()


@dataclass(frozen=True)
class FeatureVector:
    """Per-window features, min-max normalized into [0, 1] within one video."""

    count: float
    mean_length: float
    similarity: float

    def as_array(self) -> np.ndarray:
        return np.array([self.count, self.mean_length, self.similarity], dtype=float)


def raw_window_features(window: Window) -> tuple[float, float, float]:
    """Unnormalized (message count, mean word count, mean centroid similarity).

    The similarity feature builds a binary bag-of-words vector per message
    over the window's own vocabulary, averages the vectors into a centroid,
    and returns the mean cosine similarity of each message to that centroid.
    A single-message window therefore scores 1.0. Empty-text messages carry a
    zero vector and contribute similarity 0.
    """
    if not window.messages:
        raise ValueError("cannot extract features from an empty window")
    texts = [m.text for m in window.messages]
    count = float(len(texts))
    token_lists = [tokenize(t) for t in texts]
    mean_length = float(sum(len(toks) for toks in token_lists)) / count

    vocab = sorted({tok for toks in token_lists for tok in toks})
    if not vocab:
        return count, mean_length, 0.0
    index = {tok: i for i, tok in enumerate(vocab)}
    vectors = np.zeros((len(texts), len(vocab)), dtype=float)
    for row, toks in enumerate(token_lists):
        for tok in set(toks):
            vectors[row, index[tok]] = 1.0
    centroid = vectors.mean(axis=0)
    centroid_norm = float(np.linalg.norm(centroid))
    if centroid_norm == 0.0:
        return count, mean_length, 0.0
    sims = []
    for row in vectors:
        row_norm = float(np.linalg.norm(row))
        sims.append(0.0 if row_norm == 0.0 else float(row @ centroid) / (row_norm * centroid_norm))
    return count, mean_length, float(np.mean(sims))


@dataclass(frozen=True)
class FeatureScaling:
    """Per-video min-max bounds for the three raw features."""

    mins: tuple[float, float, float]
    maxs: tuple[float, float, float]

    @classmethod
    def fit(cls, raw_features: Sequence[tuple[float, float, float]]) -> "FeatureScaling":
        if not raw_features:
            raise ValueError("cannot fit scaling to zero windows")
        arr = np.asarray(raw_features, dtype=float)
        return cls(mins=tuple(arr.min(axis=0)), maxs=tuple(arr.max(axis=0)))

    def apply(self, raw: tuple[float, float, float]) -> FeatureVector:
        scaled = []
        for value, lo, hi in zip(raw, self.mins, self.maxs):
            if hi > lo:
                scaled.append((value - lo) / (hi - lo))
            else:
                # A feature constant across the video carries no signal.
                scaled.append(0.0)
        return FeatureVector(count=scaled[0], mean_length=scaled[1], similarity=scaled[2])


def extract_features(window: Window, scaling: FeatureScaling) -> FeatureVector:
    return scaling.apply(raw_window_features(window))


def train_model(
    samples: Sequence[tuple[FeatureVector, bool]],
    *,
    learning_rate: float = 0.5,
    iterations: int = 2000,
) -> LogisticModel:
    """Train the window classifier on (features, is_highlight) pairs."""
    if not samples:
        raise ValueError("cannot train on zero samples")
    x = np.array([f.as_array() for f, _ in samples], dtype=float)
    y = np.array([1.0 if label else 0.0 for _, label in samples], dtype=float)
    return train_logistic(x, y, learning_rate=learning_rate, iterations=iterations)


def predict(model: LogisticModel, features: FeatureVector) -> float:
    """Probability that the window's chat is reacting to a highlight."""
    return model.predict_one(features.as_array())


def message_bin_counts(window: Window) -> np.ndarray:
    """Message counts in 1-second bins centered on whole offsets from start."""
    n_bins = max(1, int(math.ceil(window.width_s)))
    counts = np.zeros(n_bins, dtype=float)
    for m in window.messages:
        k = int(math.floor(m.timestamp_s - window.start_s + 0.5))
        counts[min(max(k, 0), n_bins - 1)] += 1.0
    return counts


def smooth_counts(counts: np.ndarray, width: int = SMOOTH_WIDTH_BINS) -> np.ndarray:
    """Centered moving average, truncated (not zero-padded) at the edges."""
    counts = np.asarray(counts, dtype=float)
    kernel = np.ones(width)
    sums = np.convolve(counts, kernel, mode="same")
    coverage = np.convolve(np.ones_like(counts), kernel, mode="same")
    return sums / coverage


def _argmax_bin(smoothed: np.ndarray, raw: np.ndarray) -> int:
    """Highest smoothed bin; ties fall back to raw count, then earliest."""
    best = 0
    best_key = (smoothed[0], raw[0])
    for k in range(1, len(smoothed)):
        key = (smoothed[k], raw[k])
        if key > best_key:
            best, best_key = k, key
    return best


def find_peak(window: Window) -> float:
    """Timestamp of the densest 1-second message bin inside the window."""
    if not window.messages:
        raise ValueError("cannot find a peak in an empty window")
    raw = message_bin_counts(window)
    smoothed = smooth_counts(raw)
    return window.start_s + _argmax_bin(smoothed, raw)


def top_k(
    scored: Sequence[tuple[Window, float]],
    k: int,
    min_separation_s: float,
) -> list[Window]:
    """Pick up to k windows by descending probability, skipping crowding.

    A window is skipped when its peak lies within min_separation_s of any
    already-selected window's peak. Equal probabilities tie-break toward the
    earlier peak. Returns windows in selection order.
    """
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    if min_separation_s <= 0:
        raise ConfigError(f"min separation must be positive, got {min_separation_s}")
    ranked = sorted(
        ((w, p, find_peak(w)) for w, p in scored),
        key=lambda item: (-item[1], item[2]),
    )
    chosen: list[tuple[Window, float, float]] = []
    for w, p, peak in ranked:
        if len(chosen) == k:
            break
        if all(abs(peak - other_peak) > min_separation_s for _, _, other_peak in chosen):
            chosen.append((w, p, peak))
    return [w for w, _, _ in chosen]


def learn_adjustment(
    pairs: Sequence[tuple[float, HighlightSpan]],
    *,
    max_shift_s: int = MAX_ADJUSTMENT_S,
) -> float:
    """Grid-search the peak-to-start shift that lands most dots correctly.

    For each whole-second shift c in [0, max_shift_s], counts the training
    pairs whose shifted peak falls inside [start - 10, end]; returns the
    smallest c achieving the maximum count.
    """
    if not pairs:
        raise ValueError("need at least one (peak, span) training pair")
    best_c = 0
    best_score = -1
    for c in range(0, int(max_shift_s) + 1):
        score = sum(
            1
            for peak, span in pairs
            if span.start_s - START_TOLERANCE_S <= peak - c <= span.end_s
        )
        if score > best_score:
            best_c, best_score = c, score
    return float(best_c)


@dataclass(frozen=True)
class InitializerModel:
    """Everything needed to place initial red dots on a new video."""

    logistic: LogisticModel
    adjustment_s: float
    window_s: float = 25.0
    min_separation_s: float = 120.0
    k: int = 10

    def save(self, path: str | Path) -> None:
        doc = {
            "weights": list(self.logistic.weights),
            "bias": self.logistic.bias,
            "c": self.adjustment_s,
            "l": self.window_s,
            "delta_sep": self.min_separation_s,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, *, k: int = 10) -> "InitializerModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        weights = tuple(float(w) for w in doc["weights"])
        if len(weights) != 3:
            raise ValueError(f"model file must carry 3 weights, got {len(weights)}")
        return cls(
            logistic=LogisticModel(weights=weights, bias=float(doc["bias"])),
            adjustment_s=float(doc["c"]),
            window_s=float(doc["l"]),
            min_separation_s=float(doc["delta_sep"]),
            k=k,
        )


def initialize(meta: VideoMeta, messages: Sequence[ChatMessage], model: InitializerModel) -> list[RedDot]:
    """Place initial red dots for one video from its chat alone.

    Composes window building, per-video feature scaling, probability scoring,
    separated top-k selection, per-window peak finding, and the peak-to-start
    adjustment. Positions are clamped to [0, video length]. Returns dots in
    selection order, all in the initial state. No messages means no dots.
    """
    windows = build_windows(messages, model.window_s)
    if not windows:
        return []
    raws = [raw_window_features(w) for w in windows]
    scaling = FeatureScaling.fit(raws)
    scored = [(w, predict(model.logistic, scaling.apply(r))) for w, r in zip(windows, raws)]
    probability_of = {id(w): p for w, p in scored}
    dots = []
    for window in top_k(scored, model.k, model.min_separation_s):
        position = find_peak(window) - model.adjustment_s
        position = min(max(position, 0.0), meta.length_s)
        dots.append(
            RedDot(
                position_s=position,
                probability=probability_of[id(window)],
                state=RedDotState.INITIAL,
                source_window=window,
            )
        )
    return dots


def label_windows(windows: Sequence[Window], truth: GroundTruth) -> list[bool]:
    """A window is a highlight window when it overlaps any true span."""
    return [
        any(spans_overlap(w.start_s, w.end_s, h.start_s, h.end_s) for h in truth.highlights)
        for w in windows
    ]


def adjustment_pairs(
    windows: Sequence[Window],
    truth: GroundTruth,
    *,
    horizon_s: float = REACTION_HORIZON_S,
) -> list[tuple[float, HighlightSpan]]:
    """Match each true span with the chat peak reacting to it.

    For a span, the candidate windows are those whose peak falls between the
    span's start and horizon_s past its end; the busiest candidate (ties to
    the earlier window) supplies the peak. Spans with no reacting window are
    skipped.
    """
    peaks = [(w, find_peak(w)) for w in windows]
    pairs: list[tuple[float, HighlightSpan]] = []
    for span in truth.highlights:
        candidates = [
            (w, peak) for w, peak in peaks if span.start_s <= peak <= span.end_s + horizon_s
        ]
        if not candidates:
            logger.debug("no reacting window for span [%s, %s]", span.start_s, span.end_s)
            continue
        window, peak = max(candidates, key=lambda wp: (wp[0].message_count, -wp[0].start_s))
        pairs.append((peak, span))
    return pairs


def train_initializer(
    corpus: Sequence[tuple[Sequence[ChatMessage], GroundTruth]],
    *,
    window_s: float = 25.0,
    min_separation_s: float = 120.0,
    k: int = 10,
    learning_rate: float = 0.5,
    iterations: int = 2000,
) -> InitializerModel:
    """Train the window model and the adjustment constant from labeled videos.

    Features are min-max scaled within each video before pooling, so corpora
    with different chat volumes mix cleanly.
    """
    samples: list[tuple[FeatureVector, bool]] = []
    pairs: list[tuple[float, HighlightSpan]] = []
    for messages, truth in corpus:
        windows = build_windows(messages, window_s)
        if not windows:
            continue
        raws = [raw_window_features(w) for w in windows]
        scaling = FeatureScaling.fit(raws)
        labels = label_windows(windows, truth)
        samples.extend(
            (scaling.apply(r), lab) for r, lab in zip(raws, labels)
        )
        pairs.extend(adjustment_pairs(windows, truth))
    model = train_model(samples, learning_rate=learning_rate, iterations=iterations)
    adjustment = learn_adjustment(pairs)
    logger.info("trained initializer on %d windows, adjustment %.0f s", len(samples), adjustment)
    return InitializerModel(
        logistic=model,
        adjustment_s=adjustment,
        window_s=window_s,
        min_separation_s=min_separation_s,
        k=k,
    )
