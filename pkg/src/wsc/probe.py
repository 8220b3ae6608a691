"""Single-layer linear classifier over delimiter-token hidden states.

Training follows a fixed recipe: rebalance to 1:1 by downsampling the
majority class, weighted binary cross-entropy on raw logits (pos_weight =
inverse class frequency after rebalancing), Adam with lr 1e-2 for 50 epochs
at batch size 8192, all randomness seeded (default seed 41). Weights start
at zero: the objective is convex, so the optimum does not depend on the
initialization, and zeros maximize reproducibility.

Everything is numpy float64; fit is a pure function of (dataset, config).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError

MODEL_MAGIC = b"WSCM"
MODEL_VERSION = 1

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    weight_decay: float = 0.0
    epochs: int = 50
    batch_size: int = 8192
    seed: int = 41
    rebalance: bool = True
    use_pos_weight: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class LabeledDataset:
    """(hidden-state vector, binary label) pairs."""

    vectors: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int8)
        if vectors.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vectors.shape}")
        if labels.shape != (vectors.shape[0],):
            raise ValueError(
                f"label count {labels.shape} does not match {vectors.shape[0]} vectors"
            )
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ProbeModel:
    """Weights and bias of the linear probe, plus a training-config snapshot."""

    weights: np.ndarray
    bias: float
    meta: dict | None = None

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError(f"weights must be a non-empty vector, got {weights.shape}")
        if not np.all(np.isfinite(weights)) or not np.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def prepare_dataset(
    raw: LabeledDataset, config: TrainConfig, seed: int | None = None
) -> tuple[LabeledDataset, float]:
    """Rebalance to 1:1 by seeded downsampling and compute pos_weight.

    pos_weight is the inverse positive-class frequency after rebalancing
    (#neg / #pos); with exact rebalancing it is 1. The returned dataset is
    shuffled deterministically by the seed.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    labels = raw.labels
    pos_idx = np.flatnonzero(labels == 1)
    neg_idx = np.flatnonzero(labels == 0)
    if len(pos_idx) == 0 or len(neg_idx) == 0:
        raise ValueError("degenerate dataset: both classes required")
    if config.rebalance:
        keep = min(len(pos_idx), len(neg_idx))
        if len(pos_idx) > keep:
            pos_idx = rng.choice(pos_idx, size=keep, replace=False)
        if len(neg_idx) > keep:
            neg_idx = rng.choice(neg_idx, size=keep, replace=False)
    idx = np.concatenate([pos_idx, neg_idx])
    rng.shuffle(idx)
    prepared = LabeledDataset(raw.vectors[idx], labels[idx])
    n_pos = int(np.sum(prepared.labels == 1))
    n_neg = len(prepared) - n_pos
    pos_weight = n_neg / n_pos if config.use_pos_weight else 1.0
    return prepared, pos_weight


def loss_and_gradient(
    model: ProbeModel,
    batch: tuple[np.ndarray, np.ndarray],
    pos_weight: float = 1.0,
) -> tuple[float, np.ndarray, float]:
    """Weighted BCE-with-logits loss and exact analytic gradients.

    loss = mean(pos_weight * y * softplus(-z) + (1 - y) * softplus(z))
    with z = w.x + b; softplus keeps the evaluation stable for large |z|.
    """
    vectors, labels = batch
    x = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ValueError(f"dim mismatch: batch {x.shape} vs model dim {model.dim}")
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    z = x @ model.weights + model.bias
    loss = float(np.mean(pos_weight * y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)))
    # dL/dz: pos_weight*y*(sigma(z)-1) + (1-y)*sigma(z)
    sig = _sigmoid(z)
    dz = pos_weight * y * (sig - 1.0) + (1.0 - y) * sig
    grad_w = x.T @ dz / x.shape[0]
    grad_b = float(np.mean(dz))
    return loss, grad_w, grad_b


def fit(dataset: LabeledDataset, config: TrainConfig = TrainConfig()) -> ProbeModel:
    """Train the probe with Adam; deterministic for a fixed (dataset, config)."""
    prepared, pos_weight = prepare_dataset(dataset, config)
    n, dim = prepared.vectors.shape
    w = np.zeros(dim)
    b = 0.0
    m_w = np.zeros(dim)
    v_w = np.zeros(dim)
    m_b = v_b = 0.0
    step = 0
    epoch_rng = np.random.default_rng(config.seed)
    for _ in range(config.epochs):
        order = epoch_rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            model = ProbeModel(weights=w, bias=b)
            _, g_w, g_b = loss_and_gradient(
                model, (prepared.vectors[idx], prepared.labels[idx]), pos_weight
            )
            if config.weight_decay:
                g_w = g_w + config.weight_decay * w
                g_b = g_b + config.weight_decay * b
            step += 1
            c1 = 1.0 - _ADAM_BETA1**step
            c2 = 1.0 - _ADAM_BETA2**step
            m_w = _ADAM_BETA1 * m_w + (1.0 - _ADAM_BETA1) * g_w
            v_w = _ADAM_BETA2 * v_w + (1.0 - _ADAM_BETA2) * g_w * g_w
            w = w - config.learning_rate * (m_w / c1) / (np.sqrt(v_w / c2) + _ADAM_EPS)
            m_b = _ADAM_BETA1 * m_b + (1.0 - _ADAM_BETA1) * g_b
            v_b = _ADAM_BETA2 * v_b + (1.0 - _ADAM_BETA2) * g_b * g_b
            b = b - config.learning_rate * (m_b / c1) / (np.sqrt(v_b / c2) + _ADAM_EPS)
    meta = dict(asdict(config), dim=dim, n_train=n, pos_weight=pos_weight)
    return ProbeModel(weights=w, bias=b, meta=meta)


def predict(model: ProbeModel, h: Sequence[float] | np.ndarray) -> float:
    """Repetition probability sigma(w.h + b) for one hidden state."""
    x = np.asarray(h, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"dim mismatch: vector {x.shape} vs model dim {model.dim}")
    z = float(x @ model.weights + model.bias)
    return float(_sigmoid(np.array([z]))[0])


def scores(model: ProbeModel, vectors: np.ndarray) -> np.ndarray:
    """Vectorized predict over rows of ``vectors``."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ValueError(f"dim mismatch: {x.shape} vs model dim {model.dim}")
    return _sigmoid(x @ model.weights + model.bias)


def auroc(score_values: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float:
    """Area under the ROC curve as a rank statistic.

    Equals (#(pos, neg) pairs with score_pos > score_neg + 0.5 * ties) /
    (#pos * #neg). Computed from tie-averaged ranks with exact integer
    arithmetic, so it matches brute-force pair counting bit-for-bit.
    """
    s = np.asarray(score_values, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D of equal length")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos + n_neg != len(s):
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC undefined: needs both classes")
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    y_sorted = np.asarray(y)[order]
    # doubled tie-averaged rank of a group at 0-based [a, b] is (a+1)+(b+1)
    doubled_rank_sum_pos = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        doubled = (i + 1) + (j + 1)
        doubled_rank_sum_pos += doubled * int(np.sum(y_sorted[i : j + 1] == 1))
        i = j + 1
    numerator2 = doubled_rank_sum_pos - n_pos * (n_pos + 1)
    return numerator2 / (2 * n_pos * n_neg)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy at a threshold plus AUROC (None when only one class present)."""

    accuracy: float
    auroc: float | None


def evaluate(
    model: ProbeModel, dataset: LabeledDataset, threshold: float = 0.5
) -> EvalReport:
    """Accuracy at ``threshold`` (predict 1 iff score > threshold) and AUROC."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    s = scores(model, dataset.vectors)
    predicted = (s > threshold).astype(np.int8)
    accuracy = float(np.mean(predicted == dataset.labels))
    single_class = len(np.unique(dataset.labels)) < 2
    return EvalReport(
        accuracy=accuracy,
        auroc=None if single_class else auroc(s, dataset.labels),
    )


def save_model(path: str | Path, model: ProbeModel) -> None:
    """Write the probe to the WSCM binary format (weights stored as float32)."""
    meta_blob = json.dumps(model.meta or {}, separators=(",", ":")).encode("utf-8")
    parts = [
        struct.pack("<4sII", MODEL_MAGIC, MODEL_VERSION, model.dim),
        model.weights.astype("<f4").tobytes(),
        struct.pack("<f", model.bias),
        struct.pack("<I", len(meta_blob)),
        meta_blob,
    ]
    Path(path).write_bytes(b"".join(parts))


def load_model(path: str | Path) -> ProbeModel:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: not a probe model file")
    if len(raw) < 12:
        raise FormatError(f"{path}: corrupt model (truncated header)")
    _, version, dim = struct.unpack_from("<4sII", raw)
    if version != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {version}")
    offset = 12
    need = dim * 4 + 4 + 4
    if len(raw) < offset + need:
        raise FormatError(f"{path}: corrupt model (truncated payload)")
    weights = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset).astype(np.float64)
    offset += dim * 4
    (bias,) = struct.unpack_from("<f", raw, offset)
    offset += 4
    (meta_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if len(raw) != offset + meta_len:
        raise FormatError(f"{path}: corrupt model (bad metadata length)")
    try:
        meta = json.loads(raw[offset:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt model metadata: {exc}") from exc
    return ProbeModel(weights=weights, bias=float(bias), meta=meta or None)
