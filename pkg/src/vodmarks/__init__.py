"""Highlight markers for recorded live streams.

Chat bursts place initial markers (red dots) near highlight starts; viewer
play behavior then refines each marker's position and extracts the highlight
span. The package ships the scoring pipeline, a play-driven refinement loop,
seeded simulators, evaluation metrics with baselines, and an HTTP service.
"""
from .types import (
    ChatLogError,
    ChatMessage,
    ConfigError,
    GroundTruth,
    HighlightSpan,
    InsufficientDataError,
    InteractionEvent,
    Play,
    PrecisionReport,
    RedDot,
    RedDotState,
    VideoMeta,
    Window,
)

__version__ = "0.1.0"

__all__ = [
    "ChatLogError",
    "ChatMessage",
    "ConfigError",
    "GroundTruth",
    "HighlightSpan",
    "InsufficientDataError",
    "InteractionEvent",
    "Play",
    "PrecisionReport",
    "RedDot",
    "RedDotState",
    "VideoMeta",
    "Window",
    "__version__",
]
