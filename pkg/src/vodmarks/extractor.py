"""Play derivation and red-dot refinement from viewer interactions.

Viewers who click a red dot leave a trail of play/pause/seek events. Turning
those into plays, throwing out the noise, and classifying where the plays sit
relative to the dot tells us whether the dot overshot the highlight (step it
back) or sits inside it (aggregate the plays into a span and converge).
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .logistic import LogisticModel, train_logistic
from .types import (
    ConfigError,
    EventKind,
    HighlightSpan,
    InsufficientDataError,
    InteractionEvent,
    Play,
    RedDot,
    RedDotState,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractorConfig:
    """Tunables for play filtering and the refinement loop."""

    neighborhood_s: float = 60.0
    min_play_s: float = 5.0
    max_play_s: float = 180.0
    backstep_s: float = 20.0
    epsilon_s: float = 5.0
    min_plays: int = 10
    max_iterations: int = 10

    def __post_init__(self):
        if self.neighborhood_s <= 0:
            raise ConfigError(f"neighborhood must be positive, got {self.neighborhood_s}")
        if not 0 < self.min_play_s < self.max_play_s:
            raise ConfigError(
                f"need 0 < min play < max play, got {self.min_play_s}/{self.max_play_s}"
            )
        if self.backstep_s <= 0:
            raise ConfigError(f"backstep must be positive, got {self.backstep_s}")
        if self.epsilon_s <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon_s}")
        if self.epsilon_s >= self.backstep_s:
            raise ConfigError("epsilon must stay below the backstep or stepping would stall")
        if self.min_plays < 1:
            raise ConfigError(f"quorum must be at least 1, got {self.min_plays}")
        if self.max_iterations < 1:
            raise ConfigError(f"iteration cap must be at least 1, got {self.max_iterations}")


class TypeLabel(Enum):
    """Where the red dot sits relative to the highlight it should mark."""

    AFTER_END = "after_end"
    BEFORE_END = "before_end"


def derive_plays(events: Sequence[InteractionEvent]) -> list[Play]:
    """Fold one user session's events into contiguous plays.

    A play opens at a play event and closes at the next pause or seek. A seek
    during playback both closes the current play at its at_s and continues
    playback from to_s, so scrubbing while playing yields back-to-back plays.
    A pause with nothing open is ignored. A play still open when the session
    ends has no observable end position and is dropped. Events must arrive in
    non-decreasing wall_time order.
    """
    plays: list[Play] = []
    open_start: float | None = None
    last_wall: int | None = None
    user = events[0].user if events else ""

    def close(end_s: float) -> None:
        nonlocal open_start
        if open_start is not None:
            if end_s > open_start:
                plays.append(Play(user=user, start_s=open_start, end_s=end_s))
            open_start = None

    for ev in events:
        if last_wall is not None and ev.wall_time < last_wall:
            raise ValueError(
                f"events out of order: wall_time {ev.wall_time} after {last_wall} for user {ev.user}"
            )
        last_wall = ev.wall_time
        if ev.kind is EventKind.PLAY:
            close(ev.at_s)
            open_start = ev.at_s
        elif ev.kind is EventKind.PAUSE:
            if open_start is None:
                logger.debug("pause at %.1f with no open play from %s; ignored", ev.at_s, ev.user)
            close(ev.at_s)
        elif ev.kind is EventKind.SEEK:
            was_playing = open_start is not None
            close(ev.at_s)
            if was_playing:
                open_start = ev.to_s
    if open_start is not None:
        logger.debug("dropping unterminated play from %s starting at %.1f", user, open_start)
    return plays


def derive_all_plays(events: Sequence[InteractionEvent]) -> list[Play]:
    """Derive plays per user session and pool them, sorted for determinism."""
    by_user: dict[str, list[InteractionEvent]] = defaultdict(list)
    for ev in events:
        by_user[ev.user].append(ev)
    plays: list[Play] = []
    for user in sorted(by_user):
        plays.extend(derive_plays(by_user[user]))
    plays.sort(key=lambda p: (p.start_s, p.end_s, p.user))
    return plays


def _overlap_survivors(plays: list[Play]) -> list[Play]:
    """Keep the max-degree play of the interval-overlap graph plus neighbors.

    Intervals that merely touch at an endpoint still count as overlapping.
    Degree ties go to the earliest start, then earliest end.
    """
    starts = np.array([p.start_s for p in plays])
    ends = np.array([p.end_s for p in plays])
    adjacent = (starts[:, None] <= ends[None, :]) & (starts[None, :] <= ends[:, None])
    np.fill_diagonal(adjacent, False)
    degrees = adjacent.sum(axis=1)
    center = min(range(len(plays)), key=lambda i: (-degrees[i], starts[i], ends[i]))
    return [p for i, p in enumerate(plays) if i == center or adjacent[center, i]]


def filter_plays(plays: Sequence[Play], red_dot_s: float, cfg: ExtractorConfig) -> list[Play]:
    """Drop plays that cannot belong to the dot's highlight.

    Three passes: keep plays overlapping the dot's neighborhood
    [dot - neighborhood, dot + neighborhood]; keep durations within
    [min_play, max_play]; then keep only the densest cluster of the interval
    overlap graph (the best-connected play and everything touching it).
    Raises InsufficientDataError when nothing survives the first two passes.
    """
    lo = red_dot_s - cfg.neighborhood_s
    hi = red_dot_s + cfg.neighborhood_s
    near = [p for p in plays if p.start_s <= hi and p.end_s >= lo]
    sane = [p for p in near if cfg.min_play_s <= p.duration_s <= cfg.max_play_s]
    if not sane:
        raise InsufficientDataError(
            f"no usable plays near red dot at {red_dot_s:.1f}s "
            f"({len(plays)} derived, {len(near)} nearby)"
        )
    return _overlap_survivors(sane)


@dataclass(frozen=True)
class PositionFeatures:
    """Counts of plays after / before / across the red dot; an exact partition."""

    after: int
    before: int
    across: int

    @property
    def total(self) -> int:
        return self.after + self.before + self.across

    def proportions(self) -> np.ndarray:
        if self.total == 0:
            raise InsufficientDataError("no plays to featurize")
        return np.array([self.after, self.before, self.across], dtype=float) / self.total


def position_features(plays: Sequence[Play], red_dot_s: float) -> PositionFeatures:
    """Partition plays by where they sit relative to the dot.

    after: starts at or past the dot. before: ends before the dot.
    across: starts before the dot and is still going when it passes.
    """
    after = before = across = 0
    for p in plays:
        if p.start_s >= red_dot_s:
            after += 1
        elif p.end_s < red_dot_s:
            before += 1
        else:
            across += 1
    return PositionFeatures(after=after, before=before, across=across)


@dataclass(frozen=True)
class TypeClassifier:
    """Logistic model over play-position proportions; >= 0.5 means AFTER_END."""

    model: LogisticModel
    threshold: float = 0.5

    def score(self, features: PositionFeatures) -> float:
        return self.model.predict_one(features.proportions())

    def classify(self, features: PositionFeatures) -> TypeLabel:
        return TypeLabel.AFTER_END if self.score(features) >= self.threshold else TypeLabel.BEFORE_END


def train_type_classifier(
    samples: Sequence[tuple[PositionFeatures, TypeLabel]],
    *,
    learning_rate: float = 0.5,
    iterations: int = 2000,
) -> TypeClassifier:
    if not samples:
        raise ValueError("cannot train on zero samples")
    x = np.array([f.proportions() for f, _ in samples], dtype=float)
    y = np.array([1.0 if lab is TypeLabel.AFTER_END else 0.0 for _, lab in samples], dtype=float)
    return TypeClassifier(model=train_logistic(x, y, learning_rate=learning_rate, iterations=iterations))


def aggregate_type2(plays: Sequence[Play], red_dot_s: float) -> HighlightSpan:
    """Median-aggregate plays into a span for a dot inside its highlight.

    Plays ending before the dot reflect viewers who never reached it and are
    dropped first. The span runs from the median start to the median end of
    what remains (even counts average the two middle values).
    """
    kept = [p for p in plays if p.end_s >= red_dot_s]
    if not kept:
        raise InsufficientDataError("every play ends before the red dot; nothing to aggregate")
    starts = sorted(p.start_s for p in kept)
    ends = sorted(p.end_s for p in kept)

    def median(values: list[float]) -> float:
        mid = len(values) // 2
        if len(values) % 2:
            return values[mid]
        return (values[mid - 1] + values[mid]) / 2.0

    start = median(starts)
    end = median(ends)
    if end <= start:
        raise InsufficientDataError(
            f"aggregated span degenerate (start {start:.1f} >= end {end:.1f})"
        )
    return HighlightSpan(start_s=start, end_s=end)


def step_type1(position_s: float, backstep_s: float) -> float:
    """Step an overshot dot back toward the highlight, clamped at zero."""
    return max(0.0, position_s - backstep_s)


@dataclass(frozen=True)
class RefinementResult:
    """Outcome of one refinement iteration for one red dot."""

    red_dot: RedDot
    old_position_s: float
    new_position_s: float
    status: str  # "converged" | "refining" | "insufficient_data"
    label: TypeLabel | None = None
    span: HighlightSpan | None = None
    plays_used: int = 0


def refine(
    red_dot: RedDot,
    events: Sequence[InteractionEvent],
    cfg: ExtractorConfig,
    classifier: TypeClassifier,
) -> RefinementResult:
    """Run one refinement iteration for a red dot from its interaction log.

    Below the play quorum the dot is left untouched (status
    "insufficient_data"). Otherwise the dot either steps back by backstep_s
    (classified past the highlight's end) or moves to the median-aggregated
    span start; a move smaller than epsilon_s converges the dot and attaches
    the final span.
    """
    if classifier is None:
        raise ValueError("refinement requires a trained type classifier")
    old = red_dot.position_s

    def unchanged() -> RefinementResult:
        return RefinementResult(
            red_dot=red_dot, old_position_s=old, new_position_s=old, status="insufficient_data"
        )

    try:
        plays = filter_plays(derive_all_plays(events), old, cfg)
    except InsufficientDataError:
        return unchanged()
    if len(plays) < cfg.min_plays:
        logger.debug(
            "red dot at %.1f below quorum: %d of %d plays", old, len(plays), cfg.min_plays
        )
        return unchanged()

    label = classifier.classify(position_features(plays, old))
    span: HighlightSpan | None = None
    if label is TypeLabel.BEFORE_END:
        try:
            span = aggregate_type2(plays, old)
        except InsufficientDataError:
            return unchanged()
        new = span.start_s
    else:
        new = step_type1(old, cfg.backstep_s)

    # Only a span-backed position can converge; a clamped backstep cannot.
    converged = label is TypeLabel.BEFORE_END and abs(new - old) < cfg.epsilon_s
    state = RedDotState.CONVERGED if converged else RedDotState.REFINING
    updated = replace(red_dot, position_s=new, state=state)
    return RefinementResult(
        red_dot=updated,
        old_position_s=old,
        new_position_s=new,
        status="converged" if converged else "refining",
        label=label,
        span=span,
        plays_used=len(plays),
    )
