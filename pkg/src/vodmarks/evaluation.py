"""Precision metrics and comparison baselines.

The interval conventions here are load-bearing and shared across the whole
system: a start position x is correct for a span [s, e] when
s - 10 <= x <= e (viewers tolerate arriving up to 10 s early, never late),
and an end position y is correct when s <= y <= e + 10. All bounds are
inclusive.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .initializer import SMOOTH_WIDTH_BINS, START_TOLERANCE_S, smooth_counts
from .types import (
    ChatMessage,
    EventKind,
    GroundTruth,
    HighlightSpan,
    InsufficientDataError,
    InteractionEvent,
    Play,
    Window,
    spans_overlap,
)

END_TOLERANCE_S = 10.0


def start_hits(position_s: float, truth: GroundTruth) -> bool:
    """True when the position lands in [start - 10, end] of some true span."""
    return any(
        h.start_s - START_TOLERANCE_S <= position_s <= h.end_s for h in truth.highlights
    )


def end_hits(position_s: float, truth: GroundTruth) -> bool:
    """True when the position lands in [start, end + 10] of some true span."""
    return any(
        h.start_s <= position_s <= h.end_s + END_TOLERANCE_S for h in truth.highlights
    )


def is_good_red_dot(
    position_s: float,
    truth: GroundTruth,
    others: Sequence[float] = (),
    min_separation_s: float = 120.0,
) -> bool:
    """A dot is good when it catches a highlight and crowds no other dot.

    Catching a highlight means the start test above. Crowding means another
    dot within min_separation_s (inclusive: exactly min_separation_s apart
    still conflicts). With no other dots this reduces to the interval test.
    Empty truth means no dot can be good.
    """
    if not start_hits(position_s, truth):
        return False
    return all(abs(position_s - other) > min_separation_s for other in others)


def _ratio(hits: int, k: int | None, provided: int) -> float:
    denom = provided if k is None else k
    if denom <= 0:
        raise ValueError(f"k must be positive, got {denom}")
    return hits / denom


def chat_precision_at_k(
    windows: Sequence[Window], truth: GroundTruth, k: int | None = None
) -> float:
    """Fraction of the k windows that overlap any ground-truth span."""
    hits = sum(
        1
        for w in windows
        if any(spans_overlap(w.start_s, w.end_s, h.start_s, h.end_s) for h in truth.highlights)
    )
    return _ratio(hits, k, len(windows))


def video_precision_start(
    positions: Sequence[float], truth: GroundTruth, k: int | None = None
) -> float:
    """Fraction of the k start positions passing the start interval test."""
    hits = sum(1 for x in positions if start_hits(x, truth))
    return _ratio(hits, k, len(positions))


def video_precision_end(
    positions: Sequence[float], truth: GroundTruth, k: int | None = None
) -> float:
    """Fraction of the k end positions passing the end interval test."""
    hits = sum(1 for y in positions if end_hits(y, truth))
    return _ratio(hits, k, len(positions))


def _global_bins(max_t: float) -> int:
    return max(1, int(math.floor(max_t + 0.5)) + 1)


def _plateau_center(order: Sequence[int], smoothed: np.ndarray) -> int:
    """Middle bin of the bins tied for the maximum smoothed value."""
    peak_value = smoothed[order[0]]
    plateau = sorted(i for i in order if smoothed[i] == peak_value)
    return plateau[(len(plateau) - 1) // 2]


def baseline_chat_peaks(
    messages: Sequence[ChatMessage], k: int, min_separation_s: float = 120.0
) -> list[float]:
    """Naive chat-activity baseline: top-k smoothed message peaks, unshifted.

    Bins the whole video at 1-second resolution, smooths with the same
    moving average the initializer uses, and greedily picks the k highest
    bins at least min_separation_s apart (ties to raw count, then earliest).
    No peak-to-start adjustment is applied; that gap is the point of
    comparing against it.
    """
    if not messages:
        return []
    n_bins = _global_bins(max(m.timestamp_s for m in messages))
    # The timeline continues past the last message, so pad the right edge
    # before smoothing; otherwise truncated coverage inflates the final bins.
    # t = 0 is a real boundary and keeps the truncated average.
    pad = SMOOTH_WIDTH_BINS // 2
    raw = np.zeros(n_bins + pad, dtype=float)
    for m in messages:
        raw[min(int(math.floor(m.timestamp_s + 0.5)), n_bins - 1)] += 1.0
    smoothed = smooth_counts(raw, SMOOTH_WIDTH_BINS)
    order = sorted(range(n_bins), key=lambda i: (-smoothed[i], -raw[i], i))
    chosen: list[float] = []
    for i in order:
        if len(chosen) == k:
            break
        if smoothed[i] <= 0.0:
            break  # bins without any chat density are not peaks
        if all(abs(float(i) - c) > min_separation_s for c in chosen):
            chosen.append(float(i))
    return chosen


def baseline_seek_votes(
    events: Sequence[InteractionEvent],
    red_dot_s: float,
    neighborhood_s: float = 60.0,
) -> HighlightSpan:
    """Seek-direction voting baseline reconstructed from its description.

    Every backward seek adds one vote to each 1-second bin it jumps over;
    every forward seek subtracts one (skipped content was boring). The vote
    curve is smoothed, the best bin within the red dot's neighborhood is
    taken (plateaus resolve to their center), and the span is that bin
    plus/minus 10 s. No seeks at all means nothing to vote with.
    """
    seeks = [ev for ev in events if ev.kind is EventKind.SEEK]
    if not seeks:
        raise InsufficientDataError("seek-vote baseline needs at least one seek event")
    max_t = max(
        [red_dot_s + neighborhood_s]
        + [max(ev.at_s, ev.to_s) for ev in seeks]
    )
    n_bins = _global_bins(max_t)
    votes = np.zeros(n_bins, dtype=float)
    for ev in seeks:
        lo, hi = sorted((ev.at_s, ev.to_s))
        weight = 1.0 if ev.to_s < ev.at_s else -1.0
        a = max(0, int(math.floor(lo)))
        b = min(n_bins - 1, int(math.floor(hi)))
        votes[a : b + 1] += weight
    smoothed = smooth_counts(votes, SMOOTH_WIDTH_BINS)
    lo_bin = max(0, int(math.floor(red_dot_s - neighborhood_s)))
    hi_bin = min(n_bins - 1, int(math.ceil(red_dot_s + neighborhood_s)))
    candidates = range(lo_bin, hi_bin + 1)
    order = sorted(candidates, key=lambda i: (-smoothed[i], i))
    peak = _plateau_center(order, smoothed)
    return HighlightSpan(start_s=float(peak) - 10.0, end_s=float(peak) + 10.0)


def baseline_play_turnpoints(
    plays: Sequence[Play],
    red_dot_s: float | None = None,
    neighborhood_s: float = 60.0,
) -> HighlightSpan:
    """Play-density baseline: local maximum expanded to its turning points.

    Each play adds one to every 1-second bin it covers. After smoothing, the
    highest bin (within the dot's neighborhood when given) anchors the span,
    which then grows outward in both directions while the curve keeps
    falling, stopping where it turns upward again or dies to zero.
    """
    if not plays:
        raise InsufficientDataError("play-density baseline needs at least one play")
    max_t = max(p.end_s for p in plays)
    if red_dot_s is not None:
        max_t = max(max_t, red_dot_s + neighborhood_s)
    n_bins = _global_bins(max_t) + 1
    density = np.zeros(n_bins, dtype=float)
    for p in plays:
        a = max(0, int(math.floor(p.start_s)))
        b = min(n_bins - 1, int(math.ceil(p.end_s)) - 1)
        density[a : b + 1] += 1.0
    smoothed = smooth_counts(density, SMOOTH_WIDTH_BINS)
    if red_dot_s is None:
        candidates = range(n_bins)
    else:
        lo_bin = max(0, int(math.floor(red_dot_s - neighborhood_s)))
        hi_bin = min(n_bins - 1, int(math.ceil(red_dot_s + neighborhood_s)))
        candidates = range(lo_bin, hi_bin + 1)
    order = sorted(candidates, key=lambda i: (-smoothed[i], i))
    peak = _plateau_center(order, smoothed)
    if smoothed[peak] <= 0:
        raise InsufficientDataError("no play density near the red dot")

    left = peak
    while left - 1 >= 0 and 0 < smoothed[left - 1] <= smoothed[left]:
        left -= 1
    right = peak
    while right + 1 < n_bins and 0 < smoothed[right + 1] <= smoothed[right]:
        right += 1
    if right == left:
        right = left + 1
    return HighlightSpan(start_s=float(left), end_s=float(right))
