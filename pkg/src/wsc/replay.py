"""Offline re-enactment of the detect/chop decision sequence over a fixture.

Feeds each chunk's trailing hidden state through the probe and the chop
policy in generation order, stopping at the first chop exactly as the live
loop would. Saved tokens count everything from the start of the triggering
chunk to the end of the recorded trace; the regeneration cost is reported
separately as the configured budget cap, not subtracted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import WscError
from .policy import ChopAction, DetectorState, PolicyConfig, on_chunk_boundary
from .probe import ProbeModel, predict
from .traces import TraceRecord, VectorTable


@dataclass(frozen=True)
class ReplayReport:
    trace_id: str
    chop_index: int | None
    probabilities: tuple[float, ...]
    tokens_saved: int
    regen_budget: int | None

    @property
    def chopped(self) -> bool:
        return self.chop_index is not None


def replay(
    trace: TraceRecord,
    hidden: VectorTable,
    model: ProbeModel,
    config: PolicyConfig = PolicyConfig(),
    first_row: int | None = None,
) -> ReplayReport:
    """Re-run the chop policy over one recorded trace."""
    if first_row is None:
        if trace.hidden_ref is None:
            raise WscError(f"{trace.trace_id}: no hidden_ref and no first_row given")
        first_row = trace.hidden_ref.first_row
    n = len(trace.chunks)
    rows = hidden.rows(first_row, n)  # raises when vectors are missing
    if hidden.dim != model.dim:
        raise ValueError(
            f"dim mismatch: hidden table dim {hidden.dim} vs model dim {model.dim}"
        )
    state = DetectorState()
    probabilities: list[float] = []
    for i, chunk in enumerate(trace.chunks, start=1):
        p = predict(model, rows[i - 1])
        probabilities.append(p)
        decision = on_chunk_boundary(state, p, chunk.token_count, config)
        if decision.action is ChopAction.CHOP:
            delim_pos = trace.delimiter_positions[i - 1]
            chunk_start = delim_pos - chunk.token_count
            return ReplayReport(
                trace_id=trace.trace_id,
                chop_index=i,
                probabilities=tuple(probabilities),
                tokens_saved=trace.total_tokens - chunk_start,
                regen_budget=decision.regen.budget if decision.regen else None,
            )
    return ReplayReport(
        trace_id=trace.trace_id,
        chop_index=None,
        probabilities=tuple(probabilities),
        tokens_saved=0,
        regen_budget=None,
    )
