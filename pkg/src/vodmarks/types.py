"""Shared domain types for the highlight pipeline.

Everything downstream (window building, dot placement, play analysis,
evaluation, the HTTP service) trades in these values, so they live in one
module with their invariants enforced at construction time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class ConfigError(ValueError):
    """A configuration value violates its documented range."""


class ChatLogError(ValueError):
    """A chat log line could not be parsed or failed validation."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InsufficientDataError(RuntimeError):
    """Too little usable play data to act on; the caller should defer."""


@dataclass(frozen=True)
class ChatMessage:
    """One chat line, timestamped in video seconds."""

    timestamp_s: float
    user: str
    text: str

    def __post_init__(self):
        if self.timestamp_s < 0:
            raise ValueError(f"negative message timestamp {self.timestamp_s}")


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    length_s: float

    def __post_init__(self):
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if self.length_s <= 0:
            raise ValueError(f"video length must be positive, got {self.length_s}")


@dataclass(frozen=True)
class HighlightSpan:
    """A closed interval of video time holding one highlight."""

    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"span start {self.start_s} must precede end {self.end_s}")

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self) -> dict[str, float]:
        return {"start_s": self.start_s, "end_s": self.end_s}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "HighlightSpan":
        return cls(start_s=float(d["start_s"]), end_s=float(d["end_s"]))


def spans_overlap(a_start: float, a_end: float, b_start: float, b_end: float) -> bool:
    """Closed-interval intersection test; touching endpoints count."""
    return a_start <= b_end and b_start <= a_end


@dataclass(frozen=True)
class Window:
    """A fixed-width slice of the chat timeline with its member messages.

    Membership is half-open: a message at exactly end_s belongs to the next
    window over.
    """

    start_s: float
    end_s: float
    messages: tuple[ChatMessage, ...] = ()

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"window start {self.start_s} must precede end {self.end_s}")

    @property
    def message_count(self) -> int:
        return len(self.messages)

    @property
    def width_s(self) -> float:
        return self.end_s - self.start_s


class RedDotState(str, Enum):
    INITIAL = "initial"
    REFINING = "refining"
    CONVERGED = "converged"


@dataclass(frozen=True)
class RedDot:
    """A candidate highlight marker on the video progress bar."""

    position_s: float
    probability: float
    state: RedDotState = RedDotState.INITIAL
    source_window: Window | None = None

    def __post_init__(self):
        if self.position_s < 0:
            raise ValueError(f"red dot position must be >= 0, got {self.position_s}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must lie in [0, 1], got {self.probability}")


class EventKind(str, Enum):
    PLAY = "play"
    PAUSE = "pause"
    SEEK = "seek"


@dataclass(frozen=True)
class InteractionEvent:
    """One player interaction reported by a viewer session.

    wall_time is epoch milliseconds and orders events within a session;
    at_s/to_s are video positions in seconds. to_s is meaningful only for
    seeks (the landing position).
    """

    user: str
    video_id: str
    red_dot_id: str
    kind: EventKind
    at_s: float
    wall_time: int
    to_s: float | None = None

    def __post_init__(self):
        if self.at_s < 0:
            raise ValueError(f"at_s must be >= 0, got {self.at_s}")
        if self.kind is EventKind.SEEK:
            if self.to_s is None:
                raise ValueError("seek events require to_s")
            if self.to_s < 0:
                raise ValueError(f"to_s must be >= 0, got {self.to_s}")
        elif self.to_s is not None:
            raise ValueError(f"to_s is only valid on seek events, not {self.kind.value}")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "user": self.user,
            "video_id": self.video_id,
            "red_dot_id": self.red_dot_id,
            "kind": self.kind.value,
            "at_s": self.at_s,
            "wall_time": self.wall_time,
        }
        if self.kind is EventKind.SEEK:
            d["to_s"] = self.to_s
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "InteractionEvent":
        return cls(
            user=str(d["user"]),
            video_id=str(d["video_id"]),
            red_dot_id=str(d["red_dot_id"]),
            kind=EventKind(d["kind"]),
            at_s=float(d["at_s"]),
            wall_time=int(d["wall_time"]),
            to_s=float(d["to_s"]) if d.get("to_s") is not None else None,
        )


@dataclass(frozen=True)
class Play:
    """A contiguous stretch of playback by one user."""

    user: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"play start {self.start_s} must precede end {self.end_s}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class GroundTruth:
    """Labeled highlight spans for one video, sorted and non-overlapping."""

    video_id: str
    highlights: tuple[HighlightSpan, ...] = field(default=())

    def __post_init__(self):
        spans = tuple(sorted(self.highlights, key=lambda h: (h.start_s, h.end_s)))
        object.__setattr__(self, "highlights", spans)
        for prev, cur in zip(spans, spans[1:]):
            if cur.start_s < prev.end_s:
                raise ValueError(
                    f"overlapping ground-truth spans: "
                    f"[{prev.start_s}, {prev.end_s}] and [{cur.start_s}, {cur.end_s}]"
                )


@dataclass(frozen=True)
class PrecisionReport:
    """Precision of the top k outputs for one video under the three metrics."""

    k: int
    chat_precision: float
    video_precision_start: float
    video_precision_end: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "chat_precision": self.chat_precision,
            "video_precision_start": self.video_precision_start,
            "video_precision_end": self.video_precision_end,
        }
