"""Chunk segmentation: offline, streaming, and their equivalence."""

from __future__ import annotations

import numpy as np
import pytest

from wsc import ChunkerState, segment


def test_segment_basic():
    assert segment([5, 6, 9, 7, 9], {9}) == [((5, 6), 2), ((7,), 4)]


def test_segment_consecutive_delimiters_yield_empty_spans():
    assert segment([9, 9], {9}) == [((), 0), ((), 1)]


def test_segment_trailing_remainder_not_a_chunk():
    assert segment([1, 9, 2, 3], {9}) == [((1,), 1)]


def test_segment_empty_input():
    assert segment([], {9}) == []


def test_segment_requires_delimiters():
    with pytest.raises(ValueError):
        segment([1, 2], set())


def test_segment_reconstruction_property():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(0, 60))
        ids = [int(x) for x in rng.integers(0, 6, size=n)]
        delims = {0, 1}
        spans = segment(ids, delims)
        rebuilt: list[int] = []
        cursor = 0
        for tokens, delim_idx in spans:
            rebuilt.extend(tokens)
            rebuilt.append(ids[delim_idx])
            cursor = delim_idx + 1
        rebuilt.extend(ids[cursor:])
        assert rebuilt == ids


def test_feed_token_chunk_len_excludes_both_delimiters():
    state = ChunkerState({9}, prompt_len=3)
    for tok in (1, 2, 3, 4):
        assert state.feed_token(tok) is None
    event = state.feed_token(9)
    assert event is not None
    assert event.chunk_len == 4


def test_feed_token_consecutive_delimiters():
    state = ChunkerState({9}, prompt_len=3)
    first = state.feed_token(9)
    second = state.feed_token(9)
    assert first.chunk_len == 0  # nothing between prompt end and first delimiter
    assert second.chunk_len == 0


def test_streaming_matches_offline_segmentation():
    rng = np.random.default_rng(17)
    for _ in range(300):
        n = int(rng.integers(0, 80))
        ids = [int(x) for x in rng.integers(0, 8, size=n)]
        delims = {0, 7}
        spans = segment(ids, delims)
        state = ChunkerState(delims, prompt_len=0)
        events = [e for e in map(state.feed_token, ids) if e is not None]
        assert [e.chunk_len for e in events] == [len(tokens) for tokens, _ in spans]
        assert [e.delimiter_pos for e in events] == [idx for _, idx in spans]


def test_streaming_with_prompt_offset():
    # prompt tokens are not fed; positions are absolute in the full stream
    state = ChunkerState({0}, prompt_len=10)
    events = [state.feed_token(t) for t in (1, 2, 0, 3, 0)]
    boundaries = [e for e in events if e is not None]
    assert [(e.chunk_len, e.delimiter_pos) for e in boundaries] == [(2, 12), (1, 14)]


def test_chunk_len_never_negative():
    rng = np.random.default_rng(23)
    for _ in range(50):
        state = ChunkerState({3}, prompt_len=int(rng.integers(0, 5)))
        for tok in rng.integers(0, 5, size=40):
            event = state.feed_token(int(tok))
            if event is not None:
                assert event.chunk_len >= 0


class TestDelimiterPairs:
    """Two-token delimiters: boundary on the final token of the pair."""

    def test_pair_segmentation(self):
        # pair (1, 2): chunk keeps the first pair token as content
        assert segment([7, 1, 2, 8, 1, 2], set(), pair=(1, 2)) == [
            ((7, 1), 2),
            ((8, 1), 5),
        ]

    def test_pair_not_matched_out_of_order(self):
        assert segment([2, 1, 2, 1], set(), pair=(1, 2)) == [((2, 1), 2)]

    def test_pair_consumption_blocks_overlap(self):
        # (n, n, n, n) with pair (n, n): two boundaries, not three
        assert segment([4, 4, 4, 4], set(), pair=(4, 4)) == [((4,), 1), ((4,), 3)]

    def test_pair_streaming_matches_offline(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            n = int(rng.integers(0, 60))
            ids = [int(x) for x in rng.integers(0, 4, size=n)]
            spans = segment(ids, set(), pair=(0, 0))
            state = ChunkerState(set(), prompt_len=0, pair=(0, 0))
            events = [e for e in map(state.feed_token, ids) if e is not None]
            assert [e.chunk_len for e in events] == [len(t) for t, _ in spans]
            assert [e.delimiter_pos for e in events] == [i for _, i in spans]
