"""Decoding-time detection and chopping of word-salad loops.

Reasoning models burn large parts of their decoding budget on near-verbatim
self-repetition. The hidden states of the blank-line delimiter tokens that
end each reasoning chunk carry enough signal for a single linear layer to
flag these loops on-the-fly; once two consecutive chunks (or five short
ones) are flagged, the generation is chopped at the chunk boundary and a
fixed regeneration prompt with a constant budget finishes the answer.
"""

from .chunking import ChunkBoundaryEvent, ChunkerState, segment
from .errors import FormatError, ProtocolError, WscError
from .labeling import (
    LabelerConfig,
    cosine_similarity,
    find_chopping_point,
    label_salad_chunks,
    label_trace,
    relabel_for_training,
)
from .policy import (
    DEFAULT_REGEN_BUDGET,
    DEFAULT_REGENERATION_PROMPT,
    ChopAction,
    ChopDecision,
    DetectorState,
    PolicyConfig,
    RegenerationSuffix,
    apply_chop,
    build_regeneration_suffix,
    on_chunk_boundary,
    regen_budget_for,
)
from .probe import (
    EvalReport,
    LabeledDataset,
    ProbeModel,
    TrainConfig,
    auroc,
    evaluate,
    fit,
    load_model,
    loss_and_gradient,
    predict,
    prepare_dataset,
    save_model,
    scores,
)
from .replay import ReplayReport, replay
from .traces import (
    ChunkRecord,
    TableRef,
    TraceRecord,
    VectorTable,
    load_manifest,
    load_vector_table,
    parse_manifest_line,
    render_manifest_line,
    save_manifest,
    save_vector_table,
)

__version__ = "0.1.0"

__all__ = [
    "ChunkBoundaryEvent",
    "ChunkerState",
    "segment",
    "FormatError",
    "ProtocolError",
    "WscError",
    "LabelerConfig",
    "cosine_similarity",
    "find_chopping_point",
    "label_salad_chunks",
    "label_trace",
    "relabel_for_training",
    "DEFAULT_REGEN_BUDGET",
    "DEFAULT_REGENERATION_PROMPT",
    "ChopAction",
    "ChopDecision",
    "DetectorState",
    "PolicyConfig",
    "RegenerationSuffix",
    "apply_chop",
    "build_regeneration_suffix",
    "on_chunk_boundary",
    "regen_budget_for",
    "EvalReport",
    "LabeledDataset",
    "ProbeModel",
    "TrainConfig",
    "auroc",
    "evaluate",
    "fit",
    "load_model",
    "loss_and_gradient",
    "predict",
    "prepare_dataset",
    "save_model",
    "scores",
    "ReplayReport",
    "replay",
    "ChunkRecord",
    "TableRef",
    "TraceRecord",
    "VectorTable",
    "load_manifest",
    "load_vector_table",
    "parse_manifest_line",
    "render_manifest_line",
    "save_manifest",
    "save_vector_table",
]
