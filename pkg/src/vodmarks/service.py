"""HTTP surface for red dots, interaction ingestion, and refinement.

Endpoints:

    POST /videos                      register a video (chat log + model paths)
    GET  /videos/{id}/reddots         current dots with state
    POST /videos/{id}/interactions    batch of viewer events, all-or-nothing
    POST /videos/{id}/refine          run one refinement iteration, return a report

Configuration comes from arguments or the environment: VODMARKS_DATA_DIR for
the store root, VODMARKS_HOST/VODMARKS_PORT for the listen address used by
the CLI.
"""
from __future__ import annotations

import functools
import logging
import os
from pathlib import Path
from typing import Any, Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, ValidationError

from .chat_ingest import parse_chat_log
from .extractor import ExtractorConfig, TypeClassifier, refine
from .initializer import InitializerModel, initialize
from .store import (
    DuplicateVideoError,
    RedDotRecord,
    UnknownVideoError,
    VideoStore,
)
from .types import ChatLogError, EventKind, InteractionEvent, RedDotState, VideoMeta

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "VODMARKS_DATA_DIR"
HOST_ENV = "VODMARKS_HOST"
PORT_ENV = "VODMARKS_PORT"


class EventIn(BaseModel):
    user: str = Field(min_length=1)
    red_dot_id: str = Field(min_length=1)
    kind: Literal["play", "pause", "seek"]
    at_s: float = Field(ge=0)
    to_s: float | None = Field(default=None, ge=0)
    wall_time: int = Field(ge=0)


class RegisterIn(BaseModel):
    chat_log_path: str
    model_path: str
    video_id: str | None = None
    k: int | None = Field(default=None, ge=1)


@functools.lru_cache(maxsize=1)
def default_type_classifier() -> TypeClassifier:
    """Deterministically trained fallback classifier, built once per process."""
    from .simulator import train_type_classifier_from_sim

    return train_type_classifier_from_sim()


def run_refinement(
    store: VideoStore,
    video_id: str,
    cfg: ExtractorConfig,
    classifier: TypeClassifier,
) -> list[dict[str, Any]]:
    """One refinement iteration over every non-converged dot of a video.

    Returns one report entry per dot that actually ran (dots below quorum and
    already-converged dots are silently skipped) and persists the updated
    state snapshot.
    """
    state = store.load_state(video_id)
    report: list[dict[str, Any]] = []
    changed = False
    for record in state.red_dots:
        if record.state == RedDotState.CONVERGED.value:
            continue
        events = store.load_events(video_id, red_dot_id=record.red_dot_id)
        result = refine(record.as_red_dot(), events, cfg, classifier)
        if result.status == "insufficient_data":
            continue
        changed = True
        record.position_s = result.red_dot.position_s
        record.state = result.red_dot.state.value
        record.history.append(result.new_position_s)
        if result.span is not None:
            record.span = result.span
        report.append(
            {
                "red_dot_id": record.red_dot_id,
                "old_position_s": result.old_position_s,
                "new_position_s": result.new_position_s,
                "state": record.state,
                "label": result.label.value if result.label else None,
                "plays_used": result.plays_used,
                "span": result.span.to_dict() if result.span else None,
            }
        )
    if changed:
        store.save_state(state)
    return report


def create_app(
    data_dir: str | Path | None = None,
    *,
    classifier: TypeClassifier | None = None,
    extractor_config: ExtractorConfig | None = None,
) -> FastAPI:
    """Build the service around a store rooted at data_dir.

    Falls back to the VODMARKS_DATA_DIR environment variable when data_dir is
    not given. The type classifier defaults to a deterministic simulator-
    trained one, built lazily on the first refine call.
    """
    root = Path(data_dir or os.environ.get(DATA_DIR_ENV, "vodmarks-data"))
    store = VideoStore(root)
    cfg = extractor_config or ExtractorConfig()
    app = FastAPI(title="vodmarks", version="0.1.0")
    app.state.store = store

    def get_classifier() -> TypeClassifier:
        return classifier if classifier is not None else default_type_classifier()

    @app.post("/videos", status_code=201)
    def register_video(body: RegisterIn) -> dict[str, Any]:
        chat_path = Path(body.chat_log_path)
        model_path = Path(body.model_path)
        if not chat_path.exists():
            raise HTTPException(400, detail=f"chat log not found: {chat_path}")
        if not model_path.exists():
            raise HTTPException(400, detail=f"model file not found: {model_path}")
        try:
            log = parse_chat_log(chat_path)
        except ChatLogError as exc:
            raise HTTPException(400, detail=f"chat log rejected: {exc}") from exc
        model = InitializerModel.load(model_path)
        if body.k is not None:
            model = InitializerModel(
                logistic=model.logistic,
                adjustment_s=model.adjustment_s,
                window_s=model.window_s,
                min_separation_s=model.min_separation_s,
                k=body.k,
            )
        video_id = body.video_id or (log.meta.video_id if log.meta else None)
        if not video_id:
            raise HTTPException(400, detail="no video_id given and none in the chat log header")
        if log.meta is not None:
            meta = VideoMeta(video_id=video_id, length_s=log.meta.length_s)
        elif log.messages:
            meta = VideoMeta(video_id=video_id, length_s=log.messages[-1].timestamp_s + 1.0)
        else:
            raise HTTPException(400, detail="empty chat log and no metadata header")
        dots = initialize(meta, log.messages, model)
        try:
            state = store.register(meta, dots)
        except DuplicateVideoError as exc:
            raise HTTPException(409, detail=str(exc)) from exc
        return {
            "video_id": video_id,
            "length_s": meta.length_s,
            "red_dots": [_dot_payload(r) for r in state.red_dots],
        }

    @app.get("/videos/{video_id}/reddots")
    def get_red_dots(video_id: str) -> list[dict[str, Any]]:
        try:
            state = store.load_state(video_id)
        except (UnknownVideoError, ValueError) as exc:
            raise HTTPException(404, detail=f"unknown video {video_id!r}") from exc
        return [_dot_payload(r) for r in state.red_dots]

    @app.post("/videos/{video_id}/interactions")
    def post_interactions(video_id: str, body: list[Any]) -> dict[str, int]:
        # The loose item type keeps structurally-bad records (e.g. a bare
        # string) on the same all-or-nothing rejection path as bad fields.
        if not store.exists(video_id):
            raise HTTPException(404, detail=f"unknown video {video_id!r}")
        events: list[InteractionEvent] = []
        problems: list[dict[str, Any]] = []
        for i, raw in enumerate(body):
            try:
                parsed = EventIn.model_validate(raw)
                events.append(
                    InteractionEvent(
                        user=parsed.user,
                        video_id=video_id,
                        red_dot_id=parsed.red_dot_id,
                        kind=EventKind(parsed.kind),
                        at_s=parsed.at_s,
                        to_s=parsed.to_s,
                        wall_time=parsed.wall_time,
                    )
                )
            except (ValidationError, ValueError) as exc:
                problems.append({"index": i, "error": str(exc)})
        if problems:
            # All-or-nothing: one bad record rejects the whole batch.
            raise HTTPException(400, detail={"rejected": problems})
        accepted = store.append_events(video_id, events)
        return {"accepted": accepted}

    @app.post("/videos/{video_id}/refine")
    def refine_video(video_id: str) -> dict[str, Any]:
        if not store.exists(video_id):
            raise HTTPException(404, detail=f"unknown video {video_id!r}")
        report = run_refinement(store, video_id, cfg, get_classifier())
        return {"video_id": video_id, "refined": report}

    return app


def _dot_payload(record: RedDotRecord) -> dict[str, Any]:
    return {
        "red_dot_id": record.red_dot_id,
        "position_s": record.position_s,
        "state": record.state,
    }
