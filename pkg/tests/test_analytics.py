"""Corpus metrics vs independent recomputation."""

from __future__ import annotations

import csv
import io

import numpy as np
import pytest

from wsc import ChunkRecord, TraceRecord
from wsc.analytics import (
    chunk_label_stats,
    corpus_csv,
    corpus_report,
    length_savings,
    overhead_ratio,
    salad_token_percentage,
    trace_stats,
)


def make_trace(trace_id, token_counts, salad_labels):
    """Build a labeled trace with delimiter token 0 from chunk token counts."""
    ids = []
    positions = []
    chunks = []
    for i, (count, label) in enumerate(zip(token_counts, salad_labels), start=1):
        ids.extend([1] * count)
        ids.append(0)
        positions.append(len(ids) - 1)
        chunks.append(ChunkRecord(index=i, token_count=count, salad_label=label))
    return TraceRecord(
        trace_id=trace_id,
        model_id="toy",
        task="unit",
        temperature=0.0,
        token_ids=tuple(ids),
        delimiter_positions=tuple(positions),
        chunks=tuple(chunks),
    )


def test_salad_token_percentage_basic():
    trace = make_trace("a", [10, 10, 20], [0, 1, 1])
    assert salad_token_percentage(trace) == 75.0


def test_salad_token_percentage_all_benign():
    trace = make_trace("a", [5, 5], [0, 0])
    assert salad_token_percentage(trace) == 0.0


def test_salad_token_percentage_requires_labels():
    trace = make_trace("a", [5, 5], [0, 0])
    unlabeled = TraceRecord(
        trace_id="b",
        model_id="toy",
        task="unit",
        temperature=0.0,
        token_ids=trace.token_ids,
        delimiter_positions=trace.delimiter_positions,
        chunks=tuple(ChunkRecord(index=c.index, token_count=c.token_count) for c in trace.chunks),
    )
    with pytest.raises(ValueError, match="salad_label"):
        salad_token_percentage(unlabeled)


def test_salad_token_percentage_matches_bruteforce():
    rng = np.random.default_rng(14)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        counts = [int(x) for x in rng.integers(1, 40, size=n)]
        labels = [int(x) for x in rng.integers(0, 2, size=n)]
        trace = make_trace("t", counts, labels)
        expected = 100.0 * sum(c for c, y in zip(counts, labels) if y) / sum(counts)
        assert salad_token_percentage(trace) == pytest.approx(expected, abs=1e-12)


def test_chunk_label_stats_single_trace():
    stats = chunk_label_stats([make_trace("a", [4, 4, 4, 4], [0, 0, 1, 1])])
    assert stats.overall_salad_chunk_pct == 50.0
    assert stats.pre_point_pct == 0.0
    assert stats.post_point_pct == 100.0
    assert stats.per_trace[0].chopping_point == 3


def test_chunk_label_stats_without_chopping_points():
    stats = chunk_label_stats([make_trace("a", [4, 4, 4], [0, 1, 0])])
    assert stats.overall_salad_chunk_pct == pytest.approx(100.0 / 3)
    assert stats.pre_point_pct is None
    assert stats.post_point_pct is None


def test_chunk_label_stats_pools_chunks_across_traces():
    rng = np.random.default_rng(15)
    traces = []
    for i in range(20):
        n = int(rng.integers(1, 25))
        counts = [int(x) for x in rng.integers(1, 30, size=n)]
        labels = [int(x) for x in rng.integers(0, 2, size=n)]
        traces.append(make_trace(f"t{i}", counts, labels))
    stats = chunk_label_stats(traces, consecutive_required=2)

    # independent pooled recomputation
    all_labels = [c.salad_label for t in traces for c in t.chunks]
    assert stats.overall_salad_chunk_pct == pytest.approx(
        100.0 * sum(all_labels) / len(all_labels)
    )
    pre: list[int] = []
    post: list[int] = []
    for trace in traces:
        labels = [c.salad_label for c in trace.chunks]
        t = None
        for start in range(len(labels) - 1):
            if labels[start] == 1 and labels[start + 1] == 1:
                t = start + 1
                break
        if t is None:
            continue
        pre.extend(labels[: t - 1])
        post.extend(labels[t - 1 :])
    if pre:
        assert stats.pre_point_pct == pytest.approx(100.0 * sum(pre) / len(pre))
    if post:
        assert stats.post_point_pct == pytest.approx(100.0 * sum(post) / len(post))


def test_chunk_label_stats_empty_collection():
    with pytest.raises(ValueError, match="empty"):
        chunk_label_stats([])


def test_length_savings_paper_row():
    # 1904 -> 1082 tokens; the reported 43.19% was rounded from fuller precision
    assert length_savings(1904, 1082) == pytest.approx(43.19, abs=0.1)


def test_length_savings_sign_convention():
    assert length_savings(100, 100) == 0.0
    assert length_savings(100, 120) == pytest.approx(-20.0)


def test_length_savings_zero_original():
    with pytest.raises(ValueError):
        length_savings(0, 5)


def test_overhead_ratio_paper_values():
    assert overhead_ratio(4.95, 39.16, 32) == pytest.approx(0.00395, abs=1e-5)


def test_overhead_ratio_identity_and_scaling():
    assert overhead_ratio(1.0, 1.0, 1.0) == 1.0
    base = overhead_ratio(3.0, 7.0, 16)
    assert overhead_ratio(3.0, 7.0, 32) == pytest.approx(base / 2)
    assert overhead_ratio(3.0, 14.0, 16) == pytest.approx(base / 2)


def test_overhead_ratio_rejects_nonpositive():
    with pytest.raises(ValueError):
        overhead_ratio(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        overhead_ratio(1.0, -1.0, 1.0)


def test_corpus_report_rounds_to_two_decimals():
    stats = chunk_label_stats([make_trace("a", [3, 3, 3], [0, 1, 1])])
    report = corpus_report(stats)
    assert report["salad_chunk_pct"] == 66.67
    assert report["traces"] == 1
    assert report["traces_with_chopping_point"] == 1


def test_corpus_csv_has_per_trace_and_summary_rows():
    stats = chunk_label_stats(
        [make_trace("a", [4, 4], [1, 1]), make_trace("b", [4, 4], [0, 0])]
    )
    rows = list(csv.reader(io.StringIO(corpus_csv(stats))))
    assert rows[0][0] == "trace_id"
    assert [r[0] for r in rows[1:]] == ["a", "b", "ALL"]
    assert rows[3][3] == "50.00"  # pooled salad token pct
