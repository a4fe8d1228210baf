"""Shared builders and fixtures for the test suite."""
from __future__ import annotations

import itertools

import pytest

from vodmarks.types import ChatMessage, EventKind, InteractionEvent, Play, Window

_WALL = itertools.count(1_800_000_000_000)


def msg(t: float, text: str = "hi", user: str = "u1") -> ChatMessage:
    return ChatMessage(timestamp_s=float(t), user=user, text=text)


def msgs_at(times, text: str = "hi") -> list[ChatMessage]:
    return [msg(t, text=text, user=f"u{i}") for i, t in enumerate(times)]


def window_of(start: float, end: float, messages) -> Window:
    return Window(start_s=float(start), end_s=float(end), messages=tuple(messages))


def ev(
    user: str,
    kind: str,
    at_s: float,
    to_s: float | None = None,
    wall_time: int | None = None,
    red_dot_id: str = "rd-1",
    video_id: str = "v1",
) -> InteractionEvent:
    return InteractionEvent(
        user=user,
        video_id=video_id,
        red_dot_id=red_dot_id,
        kind=EventKind(kind),
        at_s=float(at_s),
        to_s=None if to_s is None else float(to_s),
        wall_time=next(_WALL) if wall_time is None else wall_time,
    )


def play(start: float, end: float, user: str = "u1") -> Play:
    return Play(user=user, start_s=float(start), end_s=float(end))


def always_classifier(label):
    """A TypeClassifier that outputs one label regardless of input."""
    from vodmarks.extractor import TypeClassifier, TypeLabel
    from vodmarks.logistic import LogisticModel

    after = label is TypeLabel.AFTER_END
    weights = (100.0, 0.0, 0.0) if after else (-100.0, 0.0, 0.0)
    return TypeClassifier(
        model=LogisticModel(weights=weights, bias=50.0 if after else -50.0)
    )


@pytest.fixture(scope="session")
def sim_classifier():
    """The deterministic simulator-trained type classifier, built once."""
    from vodmarks.simulator import train_type_classifier_from_sim

    return train_type_classifier_from_sim()
