"""On-the-fly detect/chop/regenerate policy.

Two counters track consecutive high-probability chunks, split by length:
``long_streak`` for chunks of at least ``len_threshold`` tokens and
``short_streak`` for shorter ones. A repetition event (p > thresh) bumps
its counter and zeroes the other; a benign event zeroes both. The stream is
chopped as soon as either counter reaches its limit: the triggering chunk
and its trailing delimiter are removed and a fixed regeneration prompt with
a constant token budget is appended by the caller's inference engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, TypeVar

DEFAULT_REGENERATION_PROMPT = (
    "I can find a clearer solution if I focus on the core problem."
)
DEFAULT_REGEN_BUDGET = 4096

# Rescue budgets that deviate from the 4096 default, keyed by
# (model family, task, sampling temperature).
REGEN_BUDGET_OVERRIDES: dict[tuple[str, str, float], int] = {
    ("qwen-1.5b", "aime25", 0.6): 8192,
    ("qwen-7b", "aime25", 0.6): 8192,
}

_SeqT = TypeVar("_SeqT", bound=Sequence)


class ChopAction(Enum):
    CONTINUE = "continue"
    CHOP = "chop"


@dataclass(frozen=True)
class RegenerationSuffix:
    """What to append after a chop: prompt (text and/or token ids) + budget.

    The budget counts newly generated tokens only; generation ends at
    end-of-sequence or budget exhaustion, whichever comes first.
    """

    prompt_text: str
    prompt_tokens: tuple[int, ...] | None
    budget: int


@dataclass(frozen=True)
class PolicyConfig:
    thresh: float = 0.5
    streak_len: int = 2
    len_threshold: int = 10
    short_streak_len: int = 5
    regen_prompt_text: str = DEFAULT_REGENERATION_PROMPT
    regen_prompt_tokens: tuple[int, ...] | None = None
    regen_budget: int = DEFAULT_REGEN_BUDGET
    single_chop: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.thresh < 1.0:
            raise ValueError(f"thresh must be in (0, 1), got {self.thresh}")
        if self.streak_len < 1:
            raise ValueError(f"streak_len must be >= 1, got {self.streak_len}")
        if self.short_streak_len < 1:
            raise ValueError(f"short_streak_len must be >= 1, got {self.short_streak_len}")
        if self.len_threshold < 0:
            raise ValueError(f"len_threshold must be >= 0, got {self.len_threshold}")
        if self.regen_budget < 1:
            raise ValueError(f"regen_budget must be >= 1, got {self.regen_budget}")


@dataclass
class DetectorState:
    """Streak counters for one generation stream."""

    long_streak: int = 0
    short_streak: int = 0
    chopped: bool = False


@dataclass(frozen=True)
class ChopDecision:
    action: ChopAction
    probability: float
    regen: RegenerationSuffix | None = None

    def __post_init__(self) -> None:
        if (self.regen is not None) != (self.action is ChopAction.CHOP):
            raise ValueError("regen must be present iff action is chop")


def on_chunk_boundary(
    state: DetectorState, p: float, chunk_len: int, config: PolicyConfig
) -> ChopDecision:
    """Update streak counters for one chunk boundary and decide chop/continue.

    The comparison is strict (p > thresh); at p == thresh the event counts
    as benign and both counters reset. Zero-length chunks count as short.
    """
    if chunk_len < 0:
        raise ValueError(f"chunk_len must be >= 0, got {chunk_len}")
    if config.single_chop and state.chopped:
        raise ValueError("stream already chopped")
    if p > config.thresh:
        if chunk_len >= config.len_threshold:
            state.long_streak += 1
            state.short_streak = 0
        else:
            state.short_streak += 1
            state.long_streak = 0
    else:
        state.long_streak = 0
        state.short_streak = 0
    chop_now = (
        state.long_streak >= config.streak_len
        or state.short_streak >= config.short_streak_len
    )
    if not chop_now:
        return ChopDecision(action=ChopAction.CONTINUE, probability=p)
    state.chopped = True
    if not config.single_chop:
        # fresh detection window for the regenerated continuation
        state.long_streak = 0
        state.short_streak = 0
    return ChopDecision(
        action=ChopAction.CHOP, probability=p, regen=build_regeneration_suffix(config)
    )


def apply_chop(token_ids: _SeqT, chunk_len: int) -> _SeqT:
    """Drop the triggering chunk and its trailing delimiter (chunk_len + 1 tokens)."""
    if chunk_len < 0:
        raise ValueError(f"chunk_len must be >= 0, got {chunk_len}")
    if len(token_ids) <= chunk_len:
        raise ValueError(
            f"sequence too short to chop: {len(token_ids)} tokens, chunk_len {chunk_len}"
        )
    return token_ids[: len(token_ids) - chunk_len - 1]


def build_regeneration_suffix(config: PolicyConfig) -> RegenerationSuffix:
    """The configured regeneration prompt and token budget."""
    if not config.regen_prompt_text and not config.regen_prompt_tokens:
        raise ValueError("empty regeneration prompt")
    return RegenerationSuffix(
        prompt_text=config.regen_prompt_text,
        prompt_tokens=config.regen_prompt_tokens,
        budget=config.regen_budget,
    )


def _canonical_model(model_id: str) -> str:
    lowered = model_id.lower()
    for key in ("qwen-1.5b", "qwen-7b", "llama-8b"):
        family, size = key.split("-")
        if family in lowered and size in lowered:
            return key
    return lowered


def regen_budget_for(model_id: str, task: str, temperature: float) -> int:
    """Rescue budget for a (model, task, temperature) combination.

    Unknown combinations fall back to the 4096-token default.
    """
    key = (_canonical_model(model_id), task.lower(), temperature)
    return REGEN_BUDGET_OVERRIDES.get(key, DEFAULT_REGEN_BUDGET)
