"""Play derivation, filtering, type classification, and the refinement step."""
from __future__ import annotations

import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vodmarks.extractor import (
    ExtractorConfig,
    PositionFeatures,
    RefinementResult,
    TypeClassifier,
    TypeLabel,
    aggregate_type2,
    derive_all_plays,
    derive_plays,
    filter_plays,
    position_features,
    refine,
    step_type1,
    train_type_classifier,
)
from vodmarks.logistic import LogisticModel
from vodmarks.types import (
    ConfigError,
    InsufficientDataError,
    Play,
    RedDot,
    RedDotState,
)

from conftest import ev, play


# ---------------------------------------------------------------- config


def test_config_defaults_are_valid():
    cfg = ExtractorConfig()
    assert cfg.backstep_s == 20.0 and cfg.epsilon_s == 5.0 and cfg.min_plays == 10


@pytest.mark.parametrize(
    "kwargs",
    [
        {"neighborhood_s": 0.0},
        {"min_play_s": 0.0},
        {"min_play_s": 200.0, "max_play_s": 100.0},
        {"backstep_s": -1.0},
        {"epsilon_s": 0.0},
        {"epsilon_s": 20.0},  # equal to backstep: stepping would stall
        {"min_plays": 0},
        {"max_iterations": 0},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ConfigError):
        ExtractorConfig(**kwargs)


# ---------------------------------------------------------------- derive


def test_derive_seek_during_playback_splits_the_play():
    events = [
        ev("u1", "play", 100.0, wall_time=1),
        ev("u1", "seek", 110.0, to_s=90.0, wall_time=2),
        ev("u1", "pause", 95.0, wall_time=3),
    ]
    plays = derive_plays(events)
    assert [(p.start_s, p.end_s) for p in plays] == [(100.0, 110.0), (90.0, 95.0)]


def test_derive_pause_without_play_is_ignored():
    events = [
        ev("u1", "pause", 50.0, wall_time=1),
        ev("u1", "play", 100.0, wall_time=2),
        ev("u1", "pause", 110.0, wall_time=3),
    ]
    assert [(p.start_s, p.end_s) for p in derive_plays(events)] == [(100.0, 110.0)]


def test_derive_double_play_closes_the_first():
    events = [
        ev("u1", "play", 100.0, wall_time=1),
        ev("u1", "play", 107.0, wall_time=2),
        ev("u1", "pause", 115.0, wall_time=3),
    ]
    assert [(p.start_s, p.end_s) for p in derive_plays(events)] == [
        (100.0, 107.0),
        (107.0, 115.0),
    ]


def test_derive_seek_while_paused_does_not_start_playback():
    events = [
        ev("u1", "seek", 0.0, to_s=200.0, wall_time=1),
        ev("u1", "play", 200.0, wall_time=2),
        ev("u1", "pause", 210.0, wall_time=3),
    ]
    assert [(p.start_s, p.end_s) for p in derive_plays(events)] == [(200.0, 210.0)]


def test_derive_drops_unterminated_trailing_play():
    events = [
        ev("u1", "play", 100.0, wall_time=1),
        ev("u1", "pause", 110.0, wall_time=2),
        ev("u1", "play", 300.0, wall_time=3),
    ]
    assert [(p.start_s, p.end_s) for p in derive_plays(events)] == [(100.0, 110.0)]


def test_derive_drops_zero_length_plays():
    events = [
        ev("u1", "play", 100.0, wall_time=1),
        ev("u1", "pause", 100.0, wall_time=2),
    ]
    assert derive_plays(events) == []


def test_derive_rejects_backwards_wall_time():
    events = [
        ev("u1", "play", 100.0, wall_time=10),
        ev("u1", "pause", 110.0, wall_time=9),
    ]
    with pytest.raises(ValueError):
        derive_plays(events)


def test_derive_all_plays_pools_users_sorted():
    events = [
        ev("zz", "play", 50.0, wall_time=1),
        ev("zz", "pause", 60.0, wall_time=2),
        ev("aa", "play", 50.0, wall_time=1),
        ev("aa", "pause", 55.0, wall_time=3),
    ]
    plays = derive_all_plays(events)
    assert [(p.start_s, p.end_s, p.user) for p in plays] == [
        (50.0, 55.0, "aa"),
        (50.0, 60.0, "zz"),
    ]


def test_derive_all_plays_isolates_sessions_per_user():
    # Interleaved users do not close each other's plays.
    events = [
        ev("a", "play", 10.0, wall_time=1),
        ev("b", "play", 100.0, wall_time=2),
        ev("a", "pause", 20.0, wall_time=3),
        ev("b", "pause", 120.0, wall_time=4),
    ]
    plays = derive_all_plays(events)
    assert [(p.start_s, p.end_s) for p in plays] == [(10.0, 20.0), (100.0, 120.0)]


# ---------------------------------------------------------------- filter


CFG = ExtractorConfig()


def test_filter_keeps_dense_cluster_drops_stragglers():
    plays = [play(1990, 2010, "a"), play(1995, 2015, "b"), play(2040, 2055, "c")]
    kept = filter_plays(plays, 2000.0, CFG)
    assert {(p.start_s, p.end_s) for p in kept} == {(1990.0, 2010.0), (1995.0, 2015.0)}


def test_filter_neighborhood_touch_is_inclusive():
    # Neighborhood is [1940, 2060]; a play ending exactly at 1940 stays.
    plays = [play(1930, 1940, "a"), play(1990, 2010, "b"), play(1995, 2014, "c")]
    kept = filter_plays(plays, 2000.0, CFG)
    # The far play survives pass one but is not connected to the center.
    assert {(p.start_s, p.end_s) for p in kept} == {(1990.0, 2010.0), (1995.0, 2014.0)}
    out_of_reach = [play(1920, 1939.9, "a"), play(1990, 2010, "b")]
    kept = filter_plays(out_of_reach, 2000.0, CFG)
    assert {(p.start_s, p.end_s) for p in kept} == {(1990.0, 2010.0)}


def test_filter_duration_bounds_inclusive():
    plays = [
        play(2000, 2005, "a"),  # exactly min duration
        play(2000, 2180, "b"),  # exactly max duration
        play(2000, 2004.9, "c"),  # too short
        play(1990, 2180.5, "d"),  # too long
    ]
    kept = filter_plays(plays, 2000.0, CFG)
    assert {p.user for p in kept} == {"a", "b"}


def test_filter_raises_when_nothing_survives():
    with pytest.raises(InsufficientDataError):
        filter_plays([], 2000.0, CFG)
    with pytest.raises(InsufficientDataError):
        filter_plays([play(0, 10)], 2000.0, CFG)  # far away
    with pytest.raises(InsufficientDataError):
        filter_plays([play(1999, 2001)], 2000.0, CFG)  # too short


def test_filter_touching_endpoints_count_as_overlap():
    plays = [play(1990, 2000, "a"), play(2000, 2010, "b"), play(2010, 2020, "c")]
    kept = filter_plays(plays, 2000.0, CFG)
    # b touches both; a and c touch only b. b is the unique max-degree center.
    assert {p.user for p in kept} == {"a", "b", "c"}


def _survivors_oracle(plays):
    """Quadratic pure-python restatement of the densest-cluster rule."""
    n = len(plays)
    deg = [0] * n
    adj = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and plays[i].start_s <= plays[j].end_s and plays[j].start_s <= plays[i].end_s:
                adj[i][j] = True
                deg[i] += 1
    center = min(range(n), key=lambda i: (-deg[i], plays[i].start_s, plays[i].end_s))
    return [p for i, p in enumerate(plays) if i == center or adj[center][i]]


@pytest.mark.parametrize("seed", range(50))
def test_filter_cluster_matches_quadratic_oracle(seed):
    rng = random.Random(seed)
    plays = []
    for i in range(10):
        start = 1940.0 + rng.uniform(0, 100)
        plays.append(play(round(start, 1), round(start + rng.uniform(5, 60), 1), f"u{i}"))
    got = filter_plays(plays, 2000.0, CFG)
    sane = [
        p
        for p in plays
        if p.start_s <= 2060 and p.end_s >= 1940 and 5 <= p.duration_s <= 180
    ]
    assert got == _survivors_oracle(sane)


# ------------------------------------------------------------ positions


def test_position_features_exact_partition():
    plays = [play(2000, 2020), play(1980, 1995), play(1990, 2010)]
    f = position_features(plays, 2000.0)
    assert (f.after, f.before, f.across) == (1, 1, 1)
    assert f.total == 3
    assert f.proportions().tolist() == pytest.approx([1 / 3, 1 / 3, 1 / 3])


def test_position_features_boundaries():
    r = 100.0
    assert position_features([play(100, 110)], r).after == 1  # starts at the dot
    assert position_features([play(90, 100)], r).across == 1  # ends exactly at it
    assert position_features([play(90, 99.9)], r).before == 1


def test_position_proportions_need_plays():
    with pytest.raises(InsufficientDataError):
        PositionFeatures(after=0, before=0, across=0).proportions()


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(min_value=0, max_value=500, allow_nan=False),
            st.floats(min_value=0.1, max_value=100, allow_nan=False),
        ),
        min_size=1,
        max_size=20,
    ),
    st.floats(min_value=0, max_value=600, allow_nan=False),
)
def test_position_features_always_partition(spans, r):
    plays = [play(s, s + d) for s, d in spans]
    f = position_features(plays, r)
    assert f.after + f.before + f.across == len(plays)
    assert min(f.after, f.before, f.across) >= 0


# ------------------------------------------------------------ classifier


def test_classifier_threshold_is_inclusive():
    # Zero weights and bias give a score of exactly 0.5 for any input.
    clf = TypeClassifier(model=LogisticModel(weights=(0.0, 0.0, 0.0), bias=0.0))
    f = PositionFeatures(after=1, before=1, across=1)
    assert clf.score(f) == 0.5
    assert clf.classify(f) is TypeLabel.AFTER_END


def test_train_type_classifier_separates_clear_patterns():
    after = [PositionFeatures(after=9, before=1, across=0) for _ in range(20)]
    before = [PositionFeatures(after=1, before=2, across=7) for _ in range(20)]
    samples = [(f, TypeLabel.AFTER_END) for f in after] + [
        (f, TypeLabel.BEFORE_END) for f in before
    ]
    clf = train_type_classifier(samples)
    assert clf.classify(PositionFeatures(after=8, before=2, across=0)) is TypeLabel.AFTER_END
    assert clf.classify(PositionFeatures(after=0, before=3, across=7)) is TypeLabel.BEFORE_END


def test_train_type_classifier_rejects_empty():
    with pytest.raises(ValueError):
        train_type_classifier([])


# ------------------------------------------------------------ aggregation


def test_aggregate_medians_odd():
    plays = [play(1990, 2012), play(1995, 2008), play(1992, 2010)]
    span = aggregate_type2(plays, 1990.0)
    assert (span.start_s, span.end_s) == (1992.0, 2010.0)


def test_aggregate_medians_even_average_middle_two():
    plays = [play(1990, 2010), play(1994, 2014)]
    span = aggregate_type2(plays, 1990.0)
    assert (span.start_s, span.end_s) == (1992.0, 2012.0)


def test_aggregate_drops_plays_ending_before_dot():
    plays = [play(1900, 1950), play(1990, 2012), play(1995, 2008), play(1992, 2010)]
    span = aggregate_type2(plays, 1990.0)
    assert (span.start_s, span.end_s) == (1992.0, 2010.0)


def test_aggregate_needs_surviving_plays():
    with pytest.raises(InsufficientDataError):
        aggregate_type2([play(1900, 1950)], 2000.0)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(min_value=1900, max_value=2100, allow_nan=False),
            st.floats(min_value=0.1, max_value=120, allow_nan=False),
        ),
        min_size=1,
        max_size=15,
    )
)
def test_aggregate_spans_are_always_valid(spans):
    # Because every play has start < end, the i-th smallest end always
    # exceeds the i-th smallest start, so median aggregation can never
    # produce a degenerate span from surviving plays.
    plays = [play(s, s + d) for s, d in spans]
    r = 2000.0
    if all(p.end_s < r for p in plays):
        with pytest.raises(InsufficientDataError):
            aggregate_type2(plays, r)
    else:
        span = aggregate_type2(plays, r)
        assert span.start_s < span.end_s


@pytest.mark.parametrize("seed", range(40))
def test_aggregate_matches_statistics_median(seed):
    rng = random.Random(seed)
    r = 2000.0
    plays = []
    for i in range(rng.randint(1, 25)):
        start = rng.uniform(1900, 2050)
        plays.append(play(start, start + rng.uniform(1, 80), f"u{i}"))
    kept = [p for p in plays if p.end_s >= r]
    if not kept:
        with pytest.raises(InsufficientDataError):
            aggregate_type2(plays, r)
        return
    want_start = statistics.median(p.start_s for p in kept)
    want_end = statistics.median(p.end_s for p in kept)
    if want_end <= want_start:
        with pytest.raises(InsufficientDataError):
            aggregate_type2(plays, r)
        return
    span = aggregate_type2(plays, r)
    assert span.start_s == want_start and span.end_s == want_end


# ------------------------------------------------------------ refinement


def test_step_type1_clamps_at_zero():
    assert step_type1(100.0, 20.0) == 80.0
    assert step_type1(10.0, 20.0) == 0.0


def _events_for_plays(spans, red_dot_id="rd-1"):
    """One user per (start, end) playing exactly that range."""
    events = []
    wall = 1
    for i, (s, e) in enumerate(spans):
        user = f"u{i:03d}"
        events.append(ev(user, "play", s, wall_time=wall, red_dot_id=red_dot_id))
        events.append(ev(user, "pause", e, wall_time=wall + 1, red_dot_id=red_dot_id))
        wall += 2
    return events


from conftest import always_classifier as _always  # noqa: E402


def test_refine_below_quorum_leaves_dot_untouched():
    dot = RedDot(position_s=2000.0, probability=0.9)
    events = _events_for_plays([(1990, 2010)] * 3)
    result = refine(dot, events, CFG, _always(TypeLabel.BEFORE_END))
    assert result.status == "insufficient_data"
    assert result.red_dot is dot
    assert result.new_position_s == 2000.0


def test_refine_after_end_steps_back():
    dot = RedDot(position_s=2000.0, probability=0.9)
    events = _events_for_plays([(2000 + i * 0.5, 2015 + i * 0.5) for i in range(12)])
    result = refine(dot, events, CFG, _always(TypeLabel.AFTER_END))
    assert result.status == "refining"
    assert result.label is TypeLabel.AFTER_END
    assert result.new_position_s == 1980.0
    assert result.span is None
    assert result.red_dot.state is RedDotState.REFINING
    assert result.plays_used == 12


def test_refine_before_end_far_move_keeps_refining():
    dot = RedDot(position_s=2000.0, probability=0.9)
    # Median start 1985 is 15 s away: moves but does not converge.
    events = _events_for_plays([(1985 + (i % 3) * 0.1, 2018 + i * 0.2) for i in range(11)])
    result = refine(dot, events, CFG, _always(TypeLabel.BEFORE_END))
    assert result.status == "refining"
    assert result.label is TypeLabel.BEFORE_END
    assert result.span is not None
    assert result.new_position_s == result.span.start_s
    assert abs(result.new_position_s - 2000.0) >= CFG.epsilon_s


def test_refine_before_end_small_move_converges_with_span():
    dot = RedDot(position_s=1996.0, probability=0.9)
    events = _events_for_plays([(1995 + (i % 5) * 0.5, 2015 + i * 0.3) for i in range(12)])
    result = refine(dot, events, CFG, _always(TypeLabel.BEFORE_END))
    assert result.status == "converged"
    assert result.red_dot.state is RedDotState.CONVERGED
    assert result.span is not None
    assert result.new_position_s == result.span.start_s
    assert abs(result.new_position_s - 1996.0) < CFG.epsilon_s


def test_refine_clamped_backstep_never_converges():
    # A dot near zero moves less than epsilon when the backstep clamps, but
    # an overshoot classification must not converge it: converged dots always
    # carry an aggregated span.
    dot = RedDot(position_s=3.0, probability=0.9)
    events = _events_for_plays([(3 + i * 0.1, 13 + i * 0.1) for i in range(12)])
    result = refine(dot, events, CFG, _always(TypeLabel.AFTER_END))
    assert result.new_position_s == 0.0
    assert abs(result.new_position_s - 3.0) < CFG.epsilon_s
    assert result.status == "refining"
    assert result.red_dot.state is RedDotState.REFINING
    assert result.span is None


def test_refine_no_events_is_insufficient():
    dot = RedDot(position_s=2000.0, probability=0.9)
    result = refine(dot, [], CFG, _always(TypeLabel.BEFORE_END))
    assert result.status == "insufficient_data"


def test_refine_exact_quorum_proceeds():
    dot = RedDot(position_s=2000.0, probability=0.9)
    events = _events_for_plays([(1995 + i * 0.1, 2015 + i * 0.1) for i in range(10)])
    result = refine(dot, events, CFG, _always(TypeLabel.BEFORE_END))
    assert result.status in ("refining", "converged")
    assert result.plays_used == 10


def test_refine_requires_classifier():
    dot = RedDot(position_s=2000.0, probability=0.9)
    with pytest.raises(ValueError):
        refine(dot, [], CFG, None)
