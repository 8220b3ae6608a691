"""Shared synthetic fixtures: an engineered probe plus a trace it chops."""

from __future__ import annotations

import numpy as np
import pytest

from wsc import ChunkRecord, ProbeModel, TableRef, TraceRecord, VectorTable

DELIMITER_ID = 9
FIXTURE_DIM = 8

# chunk layout: 4 long benign chunks, then salad to the end of the budget;
# the first two salad chunks are exactly len_threshold long, so the default
# policy (streak_len 2) chops at chunk 6
BENIGN_COUNTS = [60, 60, 60, 60]
SALAD_COUNTS = [10, 10] + [40] * 14


def probe_for_fixture() -> ProbeModel:
    # logit = 4 * h[0]: benign rows point to -1, salad rows to +1
    weights = np.zeros(FIXTURE_DIM)
    weights[0] = 4.0
    return ProbeModel(weights=weights, bias=0.0)


def hidden_row(salad: bool) -> np.ndarray:
    row = np.zeros(FIXTURE_DIM, dtype=np.float32)
    row[0] = 1.0 if salad else -1.0
    return row


def build_replay_fixture() -> tuple[TraceRecord, VectorTable]:
    """Trace whose planted salad run the fixture probe scores above 0.5."""
    counts = BENIGN_COUNTS + SALAD_COUNTS
    flags = [False] * len(BENIGN_COUNTS) + [True] * len(SALAD_COUNTS)
    ids: list[int] = []
    positions: list[int] = []
    chunks: list[ChunkRecord] = []
    rows: list[np.ndarray] = []
    for i, (count, salad) in enumerate(zip(counts, flags), start=1):
        ids.extend([1] * count)
        ids.append(DELIMITER_ID)
        positions.append(len(ids) - 1)
        chunks.append(
            ChunkRecord(index=i, token_count=count, salad_label=int(salad))
        )
        rows.append(hidden_row(salad))
    trace = TraceRecord(
        trace_id="fixture-0",
        model_id="toy",
        task="synthetic",
        temperature=0.0,
        token_ids=tuple(ids),
        delimiter_positions=tuple(positions),
        chunks=tuple(chunks),
        hidden_ref=TableRef("hidden.wscv", 0),
    )
    return trace, VectorTable(np.asarray(rows))


def build_benign_fixture() -> tuple[TraceRecord, VectorTable]:
    """All-benign twin of the replay fixture: nothing to chop."""
    ids: list[int] = []
    positions: list[int] = []
    chunks: list[ChunkRecord] = []
    rows: list[np.ndarray] = []
    for i, count in enumerate(BENIGN_COUNTS, start=1):
        ids.extend([1] * count)
        ids.append(DELIMITER_ID)
        positions.append(len(ids) - 1)
        chunks.append(ChunkRecord(index=i, token_count=count, salad_label=0))
        rows.append(hidden_row(salad=False))
    trace = TraceRecord(
        trace_id="benign-0",
        model_id="toy",
        task="synthetic",
        temperature=0.0,
        token_ids=tuple(ids),
        delimiter_positions=tuple(positions),
        chunks=tuple(chunks),
        hidden_ref=TableRef("hidden.wscv", 0),
    )
    return trace, VectorTable(np.asarray(rows))


@pytest.fixture
def replay_fixture():
    return build_replay_fixture()


@pytest.fixture
def benign_fixture():
    return build_benign_fixture()


@pytest.fixture
def fixture_probe():
    return probe_for_fixture()
