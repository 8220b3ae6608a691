"""Corpus metrics over labeled traces.

Covers the share of salad tokens per trace, the share of salad chunks
pooled across a corpus, the salad-chunk rates before/after each trace's
chopping point, length savings from chopping, and the per-chunk overhead
ratio of running the classifier sequentially with decoding.

Pooling semantics: chunk percentages pool chunks across traces rather than
averaging per-trace percentages; per-trace stats are kept alongside so the
other reading stays inspectable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .labeling import find_chopping_point
from .traces import TraceRecord


@dataclass(frozen=True)
class TraceStats:
    trace_id: str
    total_tokens: int
    salad_tokens: int
    total_chunks: int
    salad_chunks: int
    chopping_point: int | None
    pre_point_salad_pct: float | None
    post_point_salad_pct: float | None

    @property
    def salad_token_pct(self) -> float:
        return 100.0 * self.salad_tokens / self.total_tokens if self.total_tokens else 0.0

    @property
    def salad_chunk_pct(self) -> float:
        return 100.0 * self.salad_chunks / self.total_chunks if self.total_chunks else 0.0


@dataclass(frozen=True)
class CorpusStats:
    overall_salad_chunk_pct: float
    pre_point_pct: float | None
    post_point_pct: float | None
    salad_token_pct: float
    per_trace: tuple[TraceStats, ...]


def _salad_labels(trace: TraceRecord) -> list[int]:
    labels = []
    for chunk in trace.chunks:
        if chunk.salad_label is None:
            raise ValueError(f"{trace.trace_id}: chunk {chunk.index} has no salad_label")
        labels.append(chunk.salad_label)
    return labels


def salad_token_percentage(trace: TraceRecord) -> float:
    """Share (percent) of chunk tokens that sit inside salad-labeled chunks."""
    labels = _salad_labels(trace)
    total = sum(c.token_count for c in trace.chunks)
    if total == 0:
        return 0.0
    salad = sum(c.token_count for c, y in zip(trace.chunks, labels) if y == 1)
    return 100.0 * salad / total


def _split_at_point(labels: Sequence[int], t: int | None) -> tuple[list[int], list[int]]:
    if t is None:
        return list(labels), []
    return list(labels[: t - 1]), list(labels[t - 1 :])


def trace_stats(trace: TraceRecord, consecutive_required: int = 2) -> TraceStats:
    """Per-trace counts, chopping point, and before/after salad-chunk rates."""
    labels = _salad_labels(trace)
    total_tokens = sum(c.token_count for c in trace.chunks)
    salad_tokens = sum(c.token_count for c, y in zip(trace.chunks, labels) if y == 1)
    salad_chunks = sum(labels)
    t = find_chopping_point(labels, consecutive_required) if labels else None
    pre_pct = post_pct = None
    if t is not None:
        pre, post = _split_at_point(labels, t)
        pre_pct = 100.0 * sum(pre) / len(pre) if pre else 0.0
        post_pct = 100.0 * sum(post) / len(post)
    return TraceStats(
        trace_id=trace.trace_id,
        total_tokens=total_tokens,
        salad_tokens=salad_tokens,
        total_chunks=len(labels),
        salad_chunks=salad_chunks,
        chopping_point=t,
        pre_point_salad_pct=pre_pct,
        post_point_salad_pct=post_pct,
    )


def chunk_label_stats(
    traces: Iterable[TraceRecord], consecutive_required: int = 2
) -> CorpusStats:
    """Pooled corpus stats; pre/post rates pool only traces with a chopping point."""
    per_trace: list[TraceStats] = []
    total_chunks = salad_chunks = total_tokens = salad_tokens = 0
    pre_salad = pre_total = post_salad = post_total = 0
    for trace in traces:
        stats = trace_stats(trace, consecutive_required)
        per_trace.append(stats)
        total_chunks += stats.total_chunks
        salad_chunks += stats.salad_chunks
        total_tokens += stats.total_tokens
        salad_tokens += stats.salad_tokens
        if stats.chopping_point is not None:
            labels = _salad_labels(trace)
            pre, post = _split_at_point(labels, stats.chopping_point)
            pre_salad += sum(pre)
            pre_total += len(pre)
            post_salad += sum(post)
            post_total += len(post)
    if not per_trace:
        raise ValueError("empty trace collection")
    return CorpusStats(
        overall_salad_chunk_pct=100.0 * salad_chunks / total_chunks if total_chunks else 0.0,
        pre_point_pct=100.0 * pre_salad / pre_total if pre_total else None,
        post_point_pct=100.0 * post_salad / post_total if post_total else None,
        salad_token_pct=100.0 * salad_tokens / total_tokens if total_tokens else 0.0,
        per_trace=tuple(per_trace),
    )


def length_savings(original_len: int, new_len: int) -> float:
    """Percent of tokens saved; negative when the new generation is longer."""
    if original_len <= 0:
        raise ValueError(f"original_len must be > 0, got {original_len}")
    return 100.0 * (original_len - new_len) / original_len


def overhead_ratio(t_classifier: float, t_llm_step: float, mean_chunk_len: float) -> float:
    """Per-chunk overhead of waiting on the classifier: t_clf / (L * t_llm)."""
    if t_classifier <= 0 or t_llm_step <= 0 or mean_chunk_len <= 0:
        raise ValueError("all inputs must be positive")
    return t_classifier / (mean_chunk_len * t_llm_step)


def corpus_report(stats: CorpusStats) -> dict:
    """JSON-ready summary with the paper-table-style percentages (2 decimals)."""
    def r(x: float | None) -> float | None:
        return None if x is None else round(x, 2)

    return {
        "salad_token_pct": r(stats.salad_token_pct),
        "salad_chunk_pct": r(stats.overall_salad_chunk_pct),
        "pre_point_salad_chunk_pct": r(stats.pre_point_pct),
        "post_point_salad_chunk_pct": r(stats.post_point_pct),
        "traces": len(stats.per_trace),
        "traces_with_chopping_point": sum(
            1 for s in stats.per_trace if s.chopping_point is not None
        ),
    }


def corpus_csv(stats: CorpusStats) -> str:
    """Flat per-trace table plus a pooled summary row."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "trace_id",
            "total_tokens",
            "salad_tokens",
            "salad_token_pct",
            "total_chunks",
            "salad_chunks",
            "salad_chunk_pct",
            "chopping_point",
            "pre_point_salad_pct",
            "post_point_salad_pct",
        ]
    )

    def fmt(x: float | None) -> str:
        return "" if x is None else f"{x:.2f}"

    for s in stats.per_trace:
        writer.writerow(
            [
                s.trace_id,
                s.total_tokens,
                s.salad_tokens,
                f"{s.salad_token_pct:.2f}",
                s.total_chunks,
                s.salad_chunks,
                f"{s.salad_chunk_pct:.2f}",
                "" if s.chopping_point is None else s.chopping_point,
                fmt(s.pre_point_salad_pct),
                fmt(s.post_point_salad_pct),
            ]
        )
    writer.writerow(
        [
            "ALL",
            sum(s.total_tokens for s in stats.per_trace),
            sum(s.salad_tokens for s in stats.per_trace),
            f"{stats.salad_token_pct:.2f}",
            sum(s.total_chunks for s in stats.per_trace),
            sum(s.salad_chunks for s in stats.per_trace),
            f"{stats.overall_salad_chunk_pct:.2f}",
            "",
            fmt(stats.pre_point_pct),
            fmt(stats.post_point_pct),
        ]
    )
    return buf.getvalue()
