"""Seeded generators for synthetic chat logs and viewer interactions.

The generators mirror the empirical patterns the pipeline is built around:
chat erupts into short near-duplicate exclamations a couple dozen seconds
after a highlight, viewers who find a dot past the highlight scrub backward
hunting for it (start offsets spread uniformly over [-40, +20] from the true
start), and viewers who find it in time watch through to the end (start
offsets roughly normal, median a few seconds in; ends near the true end).
Everything is driven by numpy generators seeded from the config, so the same
seed reproduces byte-identical data.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .extractor import (
    ExtractorConfig,
    PositionFeatures,
    TypeClassifier,
    TypeLabel,
    derive_all_plays,
    filter_plays,
    position_features,
    train_type_classifier,
)
from .types import (
    ChatMessage,
    ConfigError,
    EventKind,
    GroundTruth,
    HighlightSpan,
    InsufficientDataError,
    InteractionEvent,
    VideoMeta,
)

logger = logging.getLogger(__name__)

_BACKGROUND_WORDS = [
    "anyone", "know", "what", "build", "he", "is", "running", "today", "this",
    "game", "has", "been", "pretty", "slow", "so", "far", "chat", "stream",
    "quality", "looks", "better", "now", "i", "think", "they", "should",
    "group", "mid", "still", "waiting", "for", "the", "next", "fight", "to",
    "start", "that", "was", "close", "earlier", "not", "sure", "why", "team",
    "keeps", "farming", "bot", "side", "again", "honestly",
]

_BURST_TEXTS = [
    "gg", "wow", "omg", "lol", "nice", "wtf", "insane", "clip it", "no way",
    "lets go", "holy", "what a play",
]

_WALL_EPOCH_MS = 1_700_000_000_000


@dataclass(frozen=True)
class SimConfig:
    """Knobs for one simulated video and its viewers."""

    seed: int
    video_length_s: float = 2400.0
    highlights: tuple[HighlightSpan, ...] = field(default=())
    chat_rate_per_min: float = 10.0
    burst_multiplier: float = 10.0
    burst_delay_mean_s: float = 20.0
    burst_delay_sigma_s: float = 2.0
    burst_sigma_s: float = 3.0
    viewers: int = 30
    noise_play_fraction: float = 0.2
    skip_away_fraction: float = 0.3
    watch_start_mean_s: float = 7.5
    watch_start_sigma_s: float = 5.0
    watch_end_sigma_s: float = 3.0

    def __post_init__(self):
        if self.video_length_s <= 0:
            raise ConfigError(f"video length must be positive, got {self.video_length_s}")
        for span in self.highlights:
            if span.start_s < 0 or span.end_s > self.video_length_s:
                raise ConfigError(
                    f"highlight [{span.start_s}, {span.end_s}] falls outside the "
                    f"{self.video_length_s}s video"
                )
        if self.chat_rate_per_min < 0 or self.burst_multiplier < 0:
            raise ConfigError("chat rate and burst multiplier must be non-negative")
        if not 0 <= self.noise_play_fraction <= 1:
            raise ConfigError(f"noise fraction must be in [0, 1], got {self.noise_play_fraction}")
        if self.viewers < 0:
            raise ConfigError(f"viewer count must be non-negative, got {self.viewers}")

    @property
    def video_id(self) -> str:
        return f"sim-{self.seed}"


def plant_highlights(
    seed: int,
    count: int,
    video_length_s: float,
    *,
    length_range: tuple[float, float] = (15.0, 25.0),
    min_gap_s: float = 150.0,
    edge_margin_s: float = 120.0,
) -> tuple[HighlightSpan, ...]:
    """Spread highlight spans over a video with a guaranteed minimum gap."""
    rng = np.random.default_rng([seed, 0x9147])
    lo_len, hi_len = length_range
    usable = video_length_s - 2 * edge_margin_s - count * hi_len
    if count < 1 or usable < (count - 1) * min_gap_s:
        raise ConfigError(
            f"cannot fit {count} spans of up to {hi_len}s with {min_gap_s}s gaps "
            f"into a {video_length_s}s video"
        )
    slot = (video_length_s - 2 * edge_margin_s) / count
    spans = []
    for i in range(count):
        length = float(rng.uniform(lo_len, hi_len))
        jitter_room = max(0.0, slot - length - min_gap_s)
        start = edge_margin_s + i * slot + float(rng.uniform(0, jitter_room))
        spans.append(HighlightSpan(start_s=start, end_s=start + length))
    return tuple(spans)


def simulate_chat(cfg: SimConfig) -> tuple[VideoMeta, list[ChatMessage], GroundTruth]:
    """Generate a chat log with a reaction burst after each planted highlight.

    Background chatter arrives uniformly at the configured rate with long,
    varied messages. Each highlight adds a cluster of short exclamations
    centered burst_delay seconds after the highlight starts; the burst's
    extra volume scales with (multiplier - 1), so multiplier 1 produces
    background only.
    """
    rng = np.random.default_rng([cfg.seed, 0xC4A7])
    meta = VideoMeta(video_id=cfg.video_id, length_s=cfg.video_length_s)
    messages: list[ChatMessage] = []

    rate_per_s = cfg.chat_rate_per_min / 60.0
    n_background = int(round(rate_per_s * cfg.video_length_s))
    times = np.sort(rng.uniform(0.0, cfg.video_length_s, size=n_background))
    for t in times:
        n_words = int(rng.integers(4, 13))
        words = rng.choice(_BACKGROUND_WORDS, size=n_words, replace=True)
        messages.append(
            ChatMessage(
                timestamp_s=float(t),
                user=f"viewer{int(rng.integers(0, 400)):03d}",
                text=" ".join(words),
            )
        )

    burst_size = max(0, int(round((cfg.burst_multiplier - 1.0) * rate_per_s * 10.0)))
    for span in cfg.highlights:
        if burst_size == 0:
            break
        delay = cfg.burst_delay_mean_s
        if cfg.burst_delay_sigma_s > 0:
            delay += float(rng.normal(0.0, cfg.burst_delay_sigma_s))
        center = span.start_s + delay
        burst_times = rng.normal(center, cfg.burst_sigma_s, size=burst_size)
        burst_times = np.clip(burst_times, 0.0, cfg.video_length_s)
        for t in burst_times:
            messages.append(
                ChatMessage(
                    timestamp_s=float(t),
                    user=f"viewer{int(rng.integers(0, 400)):03d}",
                    text=str(rng.choice(_BURST_TEXTS)),
                )
            )

    messages.sort(key=lambda m: m.timestamp_s)
    truth = GroundTruth(video_id=meta.video_id, highlights=cfg.highlights)
    return meta, messages, truth


class _Session:
    """Accumulates one viewer's events with strictly increasing wall time."""

    def __init__(self, rng: np.random.Generator, user: str, video_id: str, red_dot_id: str):
        self.rng = rng
        self.user = user
        self.video_id = video_id
        self.red_dot_id = red_dot_id
        self.wall = _WALL_EPOCH_MS + int(rng.integers(0, 86_400_000))
        self.events: list[InteractionEvent] = []

    def _tick(self) -> int:
        self.wall += int(self.rng.integers(1_000, 20_000))
        return self.wall

    def emit(self, kind: EventKind, at_s: float, to_s: float | None = None) -> None:
        self.events.append(
            InteractionEvent(
                user=self.user,
                video_id=self.video_id,
                red_dot_id=self.red_dot_id,
                kind=kind,
                at_s=max(0.0, at_s),
                to_s=None if to_s is None else max(0.0, to_s),
                wall_time=self._tick(),
            )
        )

    def play_stretch(self, start_s: float, end_s: float) -> None:
        self.emit(EventKind.PLAY, start_s)
        self.emit(EventKind.PAUSE, end_s)


def simulate_plays(
    cfg: SimConfig,
    red_dot_s: float,
    span: HighlightSpan,
    *,
    red_dot_id: str = "rd-1",
    forced_type: TypeLabel | None = None,
    salt: int = 0,
) -> list[InteractionEvent]:
    """Generate one round of viewer interactions against a red dot.

    The behavior mode follows the dot's position relative to the span (a dot
    past the span's end triggers hunting behavior) unless forced_type pins
    it. A noise_play_fraction slice of viewers just pokes around the dot with
    sub-threshold plays regardless. salt varies the randomness between
    collection rounds without touching the config seed.
    """
    rng = np.random.default_rng(
        [cfg.seed, salt & 0xFFFFFFFF, int(round(red_dot_s * 16)) & 0xFFFFFFFF]
    )
    label = forced_type
    if label is None:
        label = TypeLabel.AFTER_END if red_dot_s > span.end_s else TypeLabel.BEFORE_END

    events: list[InteractionEvent] = []
    for v in range(cfg.viewers):
        session = _Session(rng, f"user{v:04d}-{salt}", cfg.video_id, red_dot_id)
        if rng.random() < cfg.noise_play_fraction:
            for _ in range(int(rng.integers(1, 3))):
                pos = max(0.0, red_dot_s + float(rng.uniform(-45.0, 45.0)))
                session.play_stretch(pos, pos + float(rng.uniform(1.0, 4.0)))
        elif label is TypeLabel.AFTER_END:
            if rng.random() < cfg.skip_away_fraction:
                start = red_dot_s + float(rng.uniform(2.0, 30.0))
                session.play_stretch(start, start + float(rng.uniform(5.0, 15.0)))
            else:
                n_probes = int(rng.integers(1, 4))
                starts = [
                    max(0.0, span.start_s + float(rng.uniform(-40.0, 20.0)))
                    for _ in range(n_probes)
                ]
                durations = [float(rng.uniform(5.0, 25.0)) for _ in range(n_probes)]
                session.emit(EventKind.PLAY, starts[0])
                for i in range(1, n_probes):
                    session.emit(EventKind.SEEK, starts[i - 1] + durations[i - 1], starts[i])
                session.emit(EventKind.PAUSE, starts[-1] + durations[-1])
        else:
            start = span.start_s + float(rng.normal(cfg.watch_start_mean_s, cfg.watch_start_sigma_s))
            start = max(0.0, start)
            end = span.end_s
            if cfg.watch_end_sigma_s > 0:
                end += float(rng.normal(0.0, cfg.watch_end_sigma_s))
            if end <= start:
                end = start + 1.0
            session.emit(EventKind.SEEK, red_dot_s, start)
            session.play_stretch(start, end)
        events.extend(session.events)
    return events


def labeled_feature_samples(
    count: int,
    seed: int,
    *,
    viewers: int = 30,
    after_offset_range: tuple[float, float] = (5.0, 40.0),
    span_length_range: tuple[float, float] = (15.0, 25.0),
    extractor_cfg: ExtractorConfig | None = None,
) -> list[tuple[PositionFeatures, TypeLabel]]:
    """Build labeled (play-position features, placement) pairs for training.

    Alternates between dots planted past a span's end (hunting behavior) and
    dots planted at realistic in-span offsets (watching behavior), simulates
    a round of viewers for each, and featurizes the filtered plays exactly
    the way refinement will.
    """
    rng = np.random.default_rng([seed, 0xFEA7])
    cfg_extract = extractor_cfg or ExtractorConfig()
    samples: list[tuple[PositionFeatures, TypeLabel]] = []
    attempts = 0
    while len(samples) < count and attempts < count * 3:
        attempts += 1
        length = float(rng.uniform(*span_length_range))
        start = float(rng.uniform(200.0, 1800.0))
        span = HighlightSpan(start_s=start, end_s=start + length)
        label = TypeLabel.AFTER_END if attempts % 2 == 1 else TypeLabel.BEFORE_END
        if label is TypeLabel.AFTER_END:
            dot = span.end_s + float(rng.uniform(*after_offset_range))
        else:
            dot = min(span.end_s, span.start_s + float(rng.uniform(-10.0, length)))
        sim = SimConfig(
            seed=int(rng.integers(0, 2**31)),
            video_length_s=2400.0,
            highlights=(span,),
            viewers=viewers,
        )
        events = simulate_plays(sim, dot, span, forced_type=label, salt=attempts)
        try:
            plays = filter_plays(derive_all_plays(events), dot, cfg_extract)
        except InsufficientDataError:
            continue
        if not plays:
            continue
        samples.append((position_features(plays, dot), label))
    if len(samples) < count:
        logger.warning("requested %d labeled samples, produced %d", count, len(samples))
    return samples


def train_type_classifier_from_sim(
    seed: int = 613, count: int = 400, *, viewers: int = 30
) -> TypeClassifier:
    """Train the placement classifier on freshly simulated labeled rounds."""
    return train_type_classifier(labeled_feature_samples(count, seed, viewers=viewers))
