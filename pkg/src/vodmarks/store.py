"""File-backed persistence for videos, red dots, and interaction logs.

Layout under the root directory, one subdirectory per video:

    <root>/<video_id>/events.log   append-only interaction log, one JSON per line
    <root>/<video_id>/state.json   snapshot of red dots and refinement progress

Events are deduplicated on the (user, wall_time, kind) triple and fsynced
before the append call returns, so an acknowledged event survives a crash.
State snapshots go through a temp file and an atomic rename. All mutation
happens under a per-video lock; replaying the same log into a fresh store
reproduces the state file byte for byte.
"""
from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .types import HighlightSpan, InteractionEvent, RedDot, RedDotState, VideoMeta

logger = logging.getLogger(__name__)

_SAFE_ID = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass
class RedDotRecord:
    """Stored per-dot state: current position plus its refinement trail."""

    red_dot_id: str
    position_s: float
    probability: float
    state: str = RedDotState.INITIAL.value
    history: list[float] = field(default_factory=list)
    span: HighlightSpan | None = None
    window_start_s: float | None = None
    window_end_s: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "red_dot_id": self.red_dot_id,
            "position_s": self.position_s,
            "probability": self.probability,
            "state": self.state,
            "history": list(self.history),
            "span": self.span.to_dict() if self.span else None,
            "window_start_s": self.window_start_s,
            "window_end_s": self.window_end_s,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RedDotRecord":
        return cls(
            red_dot_id=d["red_dot_id"],
            position_s=float(d["position_s"]),
            probability=float(d["probability"]),
            state=d["state"],
            history=[float(v) for v in d.get("history", [])],
            span=HighlightSpan.from_dict(d["span"]) if d.get("span") else None,
            window_start_s=d.get("window_start_s"),
            window_end_s=d.get("window_end_s"),
        )

    def as_red_dot(self) -> RedDot:
        return RedDot(
            position_s=self.position_s,
            probability=self.probability,
            state=RedDotState(self.state),
        )


@dataclass
class VideoState:
    video_id: str
    length_s: float
    red_dots: list[RedDotRecord] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "video_id": self.video_id,
            "length_s": self.length_s,
            "red_dots": [r.to_dict() for r in self.red_dots],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VideoState":
        return cls(
            video_id=d["video_id"],
            length_s=float(d["length_s"]),
            red_dots=[RedDotRecord.from_dict(r) for r in d.get("red_dots", [])],
        )


class UnknownVideoError(KeyError):
    pass


class DuplicateVideoError(ValueError):
    pass


class VideoStore:
    """Thread-safe store of per-video state and append-only event logs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._video_locks: dict[str, threading.Lock] = {}
        self._seen_triples: dict[str, set[tuple[str, int, str]]] = {}

    def _lock_for(self, video_id: str) -> threading.Lock:
        with self._registry_lock:
            if video_id not in self._video_locks:
                self._video_locks[video_id] = threading.Lock()
            return self._video_locks[video_id]

    def _video_dir(self, video_id: str) -> Path:
        # "." and ".." match the character class but would escape the root.
        if not _SAFE_ID.match(video_id) or video_id in (".", ".."):
            raise ValueError(f"video id {video_id!r} contains unsafe characters")
        return self.root / video_id

    def _state_path(self, video_id: str) -> Path:
        return self._video_dir(video_id) / "state.json"

    def _events_path(self, video_id: str) -> Path:
        return self._video_dir(video_id) / "events.log"

    def video_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "state.json").exists())

    def exists(self, video_id: str) -> bool:
        try:
            return self._state_path(video_id).exists()
        except ValueError:
            return False

    def register(self, meta: VideoMeta, red_dots: Sequence[RedDot]) -> VideoState:
        """Create a video entry with its initial red dots; ids are rd-1..rd-n."""
        with self._lock_for(meta.video_id):
            if self.exists(meta.video_id):
                raise DuplicateVideoError(f"video {meta.video_id!r} already registered")
            records = []
            for i, dot in enumerate(red_dots, start=1):
                records.append(
                    RedDotRecord(
                        red_dot_id=f"rd-{i}",
                        position_s=dot.position_s,
                        probability=dot.probability,
                        state=dot.state.value,
                        history=[dot.position_s],
                        window_start_s=dot.source_window.start_s if dot.source_window else None,
                        window_end_s=dot.source_window.end_s if dot.source_window else None,
                    )
                )
            state = VideoState(video_id=meta.video_id, length_s=meta.length_s, red_dots=records)
            self._video_dir(meta.video_id).mkdir(parents=True, exist_ok=True)
            self._events_path(meta.video_id).touch()
            self._write_state(state)
            logger.info("registered video %s with %d red dots", meta.video_id, len(records))
            return state

    def load_state(self, video_id: str) -> VideoState:
        path = self._state_path(video_id)
        if not path.exists():
            raise UnknownVideoError(video_id)
        return VideoState.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def save_state(self, state: VideoState) -> None:
        with self._lock_for(state.video_id):
            self._write_state(state)

    def _write_state(self, state: VideoState) -> None:
        path = self._state_path(state.video_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(state.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        os.replace(tmp, path)

    def _triples(self, video_id: str) -> set[tuple[str, int, str]]:
        if video_id not in self._seen_triples:
            seen: set[tuple[str, int, str]] = set()
            path = self._events_path(video_id)
            if path.exists():
                for ev in self._read_events(path):
                    seen.add((ev.user, ev.wall_time, ev.kind.value))
            self._seen_triples[video_id] = seen
        return self._seen_triples[video_id]

    def append_events(self, video_id: str, events: Sequence[InteractionEvent]) -> int:
        """Durably append a batch, skipping already-seen triples.

        Returns the number of events actually written. The whole batch is
        appended and fsynced before returning, so every acknowledged event is
        on disk.
        """
        if not self.exists(video_id):
            raise UnknownVideoError(video_id)
        with self._lock_for(video_id):
            seen = self._triples(video_id)
            fresh = []
            for ev in events:
                triple = (ev.user, ev.wall_time, ev.kind.value)
                if triple not in seen:
                    seen.add(triple)
                    fresh.append(ev)
            if fresh:
                with open(self._events_path(video_id), "a", encoding="utf-8") as f:
                    for ev in fresh:
                        f.write(json.dumps(ev.to_dict(), sort_keys=True))
                        f.write("\n")
                    f.flush()
                    os.fsync(f.fileno())
            return len(fresh)

    @staticmethod
    def _read_events(path: Path) -> Iterable[InteractionEvent]:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    yield InteractionEvent.from_dict(json.loads(line))

    def load_events(self, video_id: str, red_dot_id: str | None = None) -> list[InteractionEvent]:
        path = self._events_path(video_id)
        if not self.exists(video_id):
            raise UnknownVideoError(video_id)
        if not path.exists():
            return []
        events = list(self._read_events(path))
        if red_dot_id is not None:
            events = [ev for ev in events if ev.red_dot_id == red_dot_id]
        return events
