"""Segment a token stream into reasoning chunks at delimiter tokens.

Two paths over the same semantics: :func:`segment` for a whole recorded
trace, and :class:`ChunkerState` for one-token-at-a-time streaming during
decoding. Chunk lengths exclude the delimiter on both paths, so a chunk's
``chunk_len`` equals its token count in the trace model.

The delimiter is a configurable token-id set rather than a hardcoded string
because tokenizers encode the blank-line break differently (one merged token
or a pair of newline tokens). For tokenizers that split the break into two
tokens, a ``pair`` can be configured: the boundary then fires on the final
token of the pair and the first token counts as chunk content, which keeps
the single-delimiter arithmetic intact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class ChunkBoundaryEvent:
    """Emitted by the streaming chunker when a delimiter completes a chunk."""

    chunk_len: int
    delimiter_pos: int


def segment(
    token_ids: Sequence[int],
    delimiter_ids: Iterable[int],
    pair: tuple[int, int] | None = None,
) -> list[tuple[tuple[int, ...], int]]:
    """Split ``token_ids`` into (chunk_tokens, trailing_delimiter_index) pairs.

    Each chunk excludes its trailing delimiter; tokens after the last
    delimiter are not a chunk. Concatenating chunks, delimiters and the
    trailing remainder reproduces the input exactly.
    """
    allowed = frozenset(delimiter_ids)
    if not allowed and pair is None:
        raise ValueError("delimiter_ids must be non-empty")
    out: list[tuple[tuple[int, ...], int]] = []
    start = 0
    if pair is None:
        for i, tok in enumerate(token_ids):
            if tok in allowed:
                out.append((tuple(token_ids[start:i]), i))
                start = i + 1
    else:
        first, last = pair
        last_boundary = -1
        for i in range(1, len(token_ids)):
            # the pair's first token must not itself be a consumed final token
            if token_ids[i] == last and token_ids[i - 1] == first and i - 1 > last_boundary:
                out.append((tuple(token_ids[start:i]), i))
                start = i + 1
                last_boundary = i
    return out


class ChunkerState:
    """Streaming chunk detector for one generation stream.

    Initialized with the prompt length so the first chunk starts at the
    first generated token; the last prompt token acts as a virtual
    delimiter.
    """

    def __init__(
        self,
        delimiter_ids: Iterable[int],
        prompt_len: int = 0,
        pair: tuple[int, int] | None = None,
    ) -> None:
        self.delimiter_ids = frozenset(delimiter_ids)
        if not self.delimiter_ids and pair is None:
            raise ValueError("delimiter_ids must be non-empty")
        if prompt_len < 0:
            raise ValueError("prompt_len must be >= 0")
        self.pair = pair
        self.last_delimiter_pos = prompt_len - 1
        self.tokens_seen = prompt_len
        self._prev_token: int | None = None
        self._prev_consumed = True

    def feed_token(self, token_id: int) -> ChunkBoundaryEvent | None:
        """Advance the stream by one token; returns an event on a boundary.

        ``chunk_len`` counts the tokens since the previous delimiter,
        exclusive of both delimiters; consecutive delimiters therefore yield
        zero-length events.
        """
        pos = self.tokens_seen
        self.tokens_seen += 1
        if self.pair is None:
            is_boundary = token_id in self.delimiter_ids
        else:
            first, last = self.pair
            is_boundary = (
                token_id == last and self._prev_token == first and not self._prev_consumed
            )
        self._prev_token = token_id
        self._prev_consumed = is_boundary
        if not is_boundary:
            return None
        chunk_len = pos - self.last_delimiter_pos - 1
        self.last_delimiter_pos = pos
        assert self.last_delimiter_pos < self.tokens_seen
        return ChunkBoundaryEvent(chunk_len=chunk_len, delimiter_pos=pos)
