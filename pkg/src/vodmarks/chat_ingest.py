"""Chat-log parsing and sliding-window construction.

Wire format: line-delimited JSON. An optional first record carries the video
metadata ({"video_id": ..., "length_s": ...}); every following record is one
message ({"t": seconds, "user": ..., "text": ...}). Lines starting with '#'
are comments. Input is decoded as UTF-8 with invalid bytes replaced, so a
mangled byte can cost a character but never the file.
"""
from __future__ import annotations

import io
import json
import logging
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

from .types import (
    ChatLogError,
    ChatMessage,
    ConfigError,
    GroundTruth,
    HighlightSpan,
    VideoMeta,
    Window,
)

logger = logging.getLogger(__name__)

# Candidate windows start every width/5 seconds (5 s stride at the 25 s default).
STRIDE_DIVISOR = 5


@dataclass(frozen=True)
class ChatLog:
    """Parsed chat file: optional metadata header plus time-sorted messages."""

    meta: VideoMeta | None
    messages: tuple[ChatMessage, ...]


def _text_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", errors="replace") as f:
            yield from f
        return
    if isinstance(source, (bytes, bytearray)):
        yield from io.StringIO(source.decode("utf-8", errors="replace"))
        return
    if isinstance(source, io.TextIOBase):
        yield from source
        return
    # Assume a binary file object.
    yield from io.TextIOWrapper(source, encoding="utf-8", errors="replace")


def parse_chat_log(source: str | Path | bytes | IO) -> ChatLog:
    """Parse a chat log into sorted messages plus the metadata header, if any.

    Messages are returned sorted by timestamp (the sort is stable, so equal
    timestamps keep file order). Malformed JSON, missing fields, negative
    timestamps, and timestamps beyond the declared video length all raise
    ChatLogError naming the offending line. An empty file parses to an empty
    log with no metadata.
    """
    meta: VideoMeta | None = None
    messages: list[ChatMessage] = []
    saw_record = False

    for line_no, raw in enumerate(_text_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ChatLogError(f"invalid JSON ({exc.msg})", line_no) from exc
        if not isinstance(record, dict):
            raise ChatLogError("expected a JSON object", line_no)

        if not saw_record and "video_id" in record and "length_s" in record:
            saw_record = True
            try:
                meta = VideoMeta(video_id=str(record["video_id"]), length_s=float(record["length_s"]))
            except (TypeError, ValueError) as exc:
                raise ChatLogError(f"bad metadata header: {exc}", line_no) from exc
            continue
        saw_record = True

        for key in ("t", "user", "text"):
            if key not in record:
                raise ChatLogError(f"message missing field {key!r}", line_no)
        t = record["t"]
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ChatLogError(f"message field 't' must be a number, got {t!r}", line_no)
        t = float(t)
        if t < 0:
            raise ChatLogError(f"negative timestamp {t}", line_no)
        if meta is not None and t > meta.length_s:
            raise ChatLogError(
                f"timestamp {t} beyond declared video length {meta.length_s}", line_no
            )
        messages.append(ChatMessage(timestamp_s=t, user=str(record["user"]), text=str(record["text"])))

    messages.sort(key=lambda m: m.timestamp_s)
    return ChatLog(meta=meta, messages=tuple(messages))


def write_chat_log(path: str | Path, meta: VideoMeta | None, messages: Sequence[ChatMessage]) -> None:
    """Serialize a chat log in the same line-delimited format parse reads."""
    with open(path, "w", encoding="utf-8") as f:
        if meta is not None:
            f.write(json.dumps({"video_id": meta.video_id, "length_s": meta.length_s}, ensure_ascii=False))
            f.write("\n")
        for m in messages:
            f.write(json.dumps({"t": m.timestamp_s, "user": m.user, "text": m.text}, ensure_ascii=False))
            f.write("\n")


def parse_labels(source: str | Path | bytes | IO) -> GroundTruth:
    """Read a labels file: {"video_id": ..., "highlights": [{start_s, end_s}]}."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8", errors="replace")
    elif isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8", errors="replace")
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8", errors="replace")
    doc = json.loads(text)
    spans = tuple(HighlightSpan.from_dict(h) for h in doc.get("highlights", ()))
    return GroundTruth(video_id=str(doc["video_id"]), highlights=spans)


def write_labels(path: str | Path, truth: GroundTruth) -> None:
    doc = {
        "video_id": truth.video_id,
        "highlights": [h.to_dict() for h in truth.highlights],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def build_windows(messages: Sequence[ChatMessage], window_s: float = 25.0) -> list[Window]:
    """Slice the chat timeline into non-overlapping message windows.

    Candidate windows of width window_s start every window_s/5 seconds.
    Empty candidates are dropped. Where surviving candidates overlap, the one
    holding more messages wins (ties go to the earlier start), so every
    message lands in at most one returned window. Windows come back sorted
    by start time.
    """
    if window_s <= 0:
        raise ConfigError(f"window width must be positive, got {window_s}")
    if not messages:
        return []
    timestamps = [m.timestamp_s for m in messages]
    for a, b in zip(timestamps, timestamps[1:]):
        if b < a:
            raise ValueError("messages must be sorted by timestamp")

    stride = window_s / STRIDE_DIVISOR
    last_t = timestamps[-1]
    candidates: list[tuple[float, int, int]] = []  # (start, msg_lo, msg_hi)
    k = 0
    while True:
        start = k * stride
        if start > last_t:
            break
        lo = bisect_left(timestamps, start)
        hi = bisect_left(timestamps, start + window_s)
        if hi > lo:
            candidates.append((start, lo, hi))
        k += 1

    # Greedy keep-the-biggest pruning over overlapping candidates.
    candidates.sort(key=lambda c: (-(c[2] - c[1]), c[0]))
    kept: list[tuple[float, int, int]] = []
    for cand in candidates:
        if all(abs(cand[0] - other[0]) >= window_s for other in kept):
            kept.append(cand)
    kept.sort(key=lambda c: c[0])

    windows = [
        Window(start_s=start, end_s=start + window_s, messages=tuple(messages[lo:hi]))
        for start, lo, hi in kept
    ]
    logger.debug("built %d windows from %d messages", len(windows), len(messages))
    return windows
