"""Word-salad chunk labeling on precomputed chunk embeddings.

A chunk is a salad chunk when its embedding is highly similar (cosine >=
theta) to some earlier chunk within a lookback window. The chopping point
of a trace is the earliest chunk that starts a run of ``consecutive_required``
salad-labeled chunks; for training, everything before that point is
relabeled 0 and everything from it onward 1, because the target is "past
the point of no return", not "is locally similar". Traces without a
chopping point contribute all-zero training labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class LabelerConfig:
    theta: float = 0.99
    window: int = 100
    consecutive_required: int = 2

    def __post_init__(self) -> None:
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must be in (0, 1], got {self.theta}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.consecutive_required < 1:
            raise ValueError(
                f"consecutive_required must be >= 1, got {self.consecutive_required}"
            )


def cosine_similarity(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between two vectors, clipped to [-1, 1]."""
    ua = np.asarray(u, dtype=np.float64)
    va = np.asarray(v, dtype=np.float64)
    if ua.shape != va.shape or ua.ndim != 1:
        raise ValueError(f"dimension mismatch: {ua.shape} vs {va.shape}")
    nu = float(np.linalg.norm(ua))
    nv = float(np.linalg.norm(va))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("undefined similarity: zero vector")
    return float(np.clip(np.dot(ua, va) / (nu * nv), -1.0, 1.0))


def label_salad_chunks(
    embeddings: Sequence[Sequence[float]] | np.ndarray, config: LabelerConfig
) -> list[int]:
    """Per-chunk binary salad labels.

    label_i = 1 iff some chunk j with i - window <= j < i has cosine
    similarity >= theta to chunk i (ties count as salad). The first chunk is
    always 0.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise ValueError(f"embeddings must be 2-D, got shape {emb.shape}")
    if emb.shape[0] == 0:
        raise ValueError("at least one embedding required")
    norms = np.linalg.norm(emb, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("undefined similarity: zero vector")
    unit = emb / norms[:, None]
    n = emb.shape[0]
    labels = [0] * n
    for i in range(1, n):
        lo = max(0, i - config.window)
        sims = unit[lo:i] @ unit[i]
        if np.any(sims >= config.theta):
            labels[i] = 1
    return labels


def find_chopping_point(labels: Sequence[int], consecutive_required: int) -> int | None:
    """Smallest 1-based t such that labels[t .. t+k-1] are all 1, else None."""
    if not labels:
        raise ValueError("labels must be non-empty")
    if consecutive_required < 1:
        raise ValueError("consecutive_required must be >= 1")
    k = consecutive_required
    run = 0
    for i, label in enumerate(labels):
        run = run + 1 if label == 1 else 0
        if run >= k:
            return i - k + 2  # 1-based start of the run
    return None


def relabel_for_training(labels: Sequence[int], t: int | None) -> list[int]:
    """Training labels: 0 before the chopping point, 1 from it onward.

    ``t`` is 1-based. ``t=None`` (no chopping point) yields all zeros: the
    trace's raw salad labels are discarded.
    """
    n = len(labels)
    if t is None:
        return [0] * n
    if not 1 <= t <= n:
        raise ValueError(f"chopping point {t} out of range 1..{n}")
    return [0] * (t - 1) + [1] * (n - t + 1)


def label_trace(
    embeddings: Sequence[Sequence[float]] | np.ndarray, config: LabelerConfig
) -> tuple[list[int], int | None, list[int]]:
    """Full curation for one trace: salad labels, chopping point, train labels."""
    salad = label_salad_chunks(embeddings, config)
    t = find_chopping_point(salad, config.consecutive_required)
    return salad, t, relabel_for_training(salad, t)
