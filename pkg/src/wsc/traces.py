"""Domain types and fixture file formats for reasoning traces.

Two on-disk formats live here and are shared by every other module:

* Vector table (binary): magic ``WSCV``, u32 format version, u64 row count,
  u32 dimension, u8 dtype code (0x01 = float32), then rows in row-major
  order. All integers and floats little-endian.
* Trace manifest (text): one JSON object per line with keys ``trace_id``,
  ``model_id``, ``task``, ``temperature``, ``token_ids`` (or ``token_count``
  when ids are withheld), ``delimiter_positions``, ``chunks``, ``hidden_ref``
  and ``embed_ref``. Field names are part of the contract.

Vectors are stored as float32: they only ever feed a linear classifier, so
the precision loss is immaterial and halves fixture size.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import FormatError, WscError

VECTOR_TABLE_MAGIC = b"WSCV"
VECTOR_TABLE_VERSION = 1
DTYPE_F32 = 0x01

_HEADER = struct.Struct("<4sIQIB")  # magic, version, count, dim, dtype


@dataclass(frozen=True)
class ChunkRecord:
    """One delimiter-terminated chunk of a reasoning trace.

    ``token_count`` excludes the trailing delimiter token. Consecutive
    delimiters produce a zero-length chunk; it is kept (token_count 0) so
    that delimiter arithmetic stays consistent, and downstream it always
    counts as a short chunk.
    """

    index: int
    token_count: int
    text: str | None = None
    salad_label: int | None = None
    train_label: int | None = None

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"chunk index must be 1-based, got {self.index}")
        if self.token_count < 0:
            raise ValueError(f"negative token_count {self.token_count}")
        for name in ("salad_label", "train_label"):
            value = getattr(self, name)
            if value is not None and value not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {value!r}")


@dataclass(frozen=True)
class TableRef:
    """Reference into a vector table: file path plus first row of this trace."""

    path: str
    first_row: int

    def __post_init__(self) -> None:
        if self.first_row < 0:
            raise ValueError(f"negative first_row {self.first_row}")


class VectorTable:
    """Immutable container of fixed-dimension float32 vectors."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray) -> None:
        arr = np.ascontiguousarray(data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"vector table data must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector table contains non-finite values")
        self.data = arr
        self.data.setflags(write=False)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def rows(self, first_row: int, n: int) -> np.ndarray:
        """Return rows [first_row, first_row + n); raises if out of range."""
        if first_row < 0 or first_row + n > self.count:
            raise WscError(
                f"row range [{first_row}, {first_row + n}) outside table of {self.count} rows"
            )
        return self.data[first_row : first_row + n]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorTable):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"VectorTable(count={self.count}, dim={self.dim})"

    @classmethod
    def empty(cls, dim: int) -> "VectorTable":
        return cls(np.empty((0, dim), dtype=np.float32))


def save_vector_table(path: str | Path, table: VectorTable) -> None:
    """Write ``table`` to ``path`` in the WSCV binary format."""
    if table.dim == 0 and table.count > 0:
        raise ValueError("cannot save vector table with dim 0 and nonzero count")
    header = _HEADER.pack(
        VECTOR_TABLE_MAGIC, VECTOR_TABLE_VERSION, table.count, table.dim, DTYPE_F32
    )
    payload = table.data.astype("<f4", copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def load_vector_table(path: str | Path) -> VectorTable:
    """Read a WSCV file back into a :class:`VectorTable`."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != VECTOR_TABLE_MAGIC:
        raise FormatError(f"{path}: not a vector table")
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: corrupt table (truncated header)")
    magic, version, count, dim, dtype = _HEADER.unpack_from(raw)
    if version != VECTOR_TABLE_VERSION:
        raise FormatError(f"{path}: unsupported vector table version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype:#x}")
    expected = count * dim * 4
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: corrupt table ({len(payload)} payload bytes, expected {expected})"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: corrupt table (non-finite values)")
    return VectorTable(data)


@dataclass(frozen=True)
class TraceRecord:
    """One reasoning trace: tokens, chunk boundaries, and vector references.

    ``token_ids`` may be withheld (e.g. to keep fixtures small); then
    ``token_count`` carries the trace length. Chunks end at their trailing
    delimiter; text after the last delimiter is carried as raw tokens only.
    """

    trace_id: str
    model_id: str
    task: str
    temperature: float
    delimiter_positions: tuple[int, ...]
    chunks: tuple[ChunkRecord, ...]
    token_ids: tuple[int, ...] | None = None
    token_count: int | None = None
    hidden_ref: TableRef | None = None
    embed_ref: TableRef | None = None

    def __post_init__(self) -> None:
        if self.token_ids is not None:
            if self.token_count is not None and self.token_count != len(self.token_ids):
                raise ValueError(
                    f"token_count {self.token_count} != len(token_ids) {len(self.token_ids)}"
                )
            object.__setattr__(self, "token_count", None)
        elif self.token_count is None:
            raise ValueError("either token_ids or token_count is required")
        self.validate()

    @property
    def total_tokens(self) -> int:
        if self.token_ids is not None:
            return len(self.token_ids)
        assert self.token_count is not None
        return self.token_count

    def validate(self, delimiter_ids: Iterable[int] | None = None) -> None:
        """Check the structural invariants; raises WscError on violation.

        When ``delimiter_ids`` is given and token ids are present, also checks
        that every delimiter position indexes a configured delimiter token.
        """
        positions = self.delimiter_positions
        total = self.total_tokens
        for prev, cur in zip(positions, positions[1:]):
            if cur <= prev:
                raise WscError(
                    f"{self.trace_id}: delimiter positions not strictly increasing"
                )
        if positions and (positions[0] < 0 or positions[-1] >= total):
            raise WscError(f"{self.trace_id}: delimiter position out of range")
        if len(self.chunks) != len(positions):
            raise WscError(
                f"{self.trace_id}: {len(self.chunks)} chunks for "
                f"{len(positions)} delimiters"
            )
        prev_pos = -1
        for chunk, pos in zip(self.chunks, positions):
            if chunk.token_count != pos - prev_pos - 1:
                raise WscError(
                    f"{self.trace_id}: chunk {chunk.index} token_count "
                    f"{chunk.token_count} does not match delimiter gap {pos - prev_pos - 1}"
                )
            prev_pos = pos
        for i, chunk in enumerate(self.chunks, start=1):
            if chunk.index != i:
                raise WscError(f"{self.trace_id}: chunk indices not 1..n in order")
        if positions:
            counted = sum(c.token_count for c in self.chunks) + len(self.chunks)
            if counted != positions[-1] + 1:
                raise WscError(
                    f"{self.trace_id}: chunk tokens + delimiters ({counted}) != "
                    f"index after last delimiter ({positions[-1] + 1})"
                )
        if delimiter_ids is not None and self.token_ids is not None:
            allowed = frozenset(delimiter_ids)
            for pos in positions:
                if self.token_ids[pos] not in allowed:
                    raise WscError(
                        f"{self.trace_id}: token {self.token_ids[pos]} at position "
                        f"{pos} is not a configured delimiter"
                    )


def _chunk_to_json(chunk: ChunkRecord) -> dict:
    out: dict = {"index": chunk.index, "token_count": chunk.token_count}
    if chunk.text is not None:
        out["text"] = chunk.text
    if chunk.salad_label is not None:
        out["salad_label"] = chunk.salad_label
    if chunk.train_label is not None:
        out["train_label"] = chunk.train_label
    return out


def _chunk_from_json(obj: dict) -> ChunkRecord:
    return ChunkRecord(
        index=obj["index"],
        token_count=obj["token_count"],
        text=obj.get("text"),
        salad_label=obj.get("salad_label"),
        train_label=obj.get("train_label"),
    )


def render_manifest_line(record: TraceRecord) -> str:
    """Serialize one trace to its manifest JSON line (no trailing newline)."""
    obj: dict = {
        "trace_id": record.trace_id,
        "model_id": record.model_id,
        "task": record.task,
        "temperature": record.temperature,
    }
    if record.token_ids is not None:
        obj["token_ids"] = list(record.token_ids)
    else:
        obj["token_count"] = record.token_count
    obj["delimiter_positions"] = list(record.delimiter_positions)
    obj["chunks"] = [_chunk_to_json(c) for c in record.chunks]
    if record.hidden_ref is not None:
        obj["hidden_ref"] = {
            "path": record.hidden_ref.path,
            "first_row": record.hidden_ref.first_row,
        }
    if record.embed_ref is not None:
        obj["embed_ref"] = {
            "path": record.embed_ref.path,
            "first_row": record.embed_ref.first_row,
        }
    return json.dumps(obj, separators=(",", ":"))


def parse_manifest_line(line: str) -> TraceRecord:
    """Parse one manifest line; validates the trace invariants."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad manifest line: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError("bad manifest line: not an object")
    try:
        token_ids = obj.get("token_ids")
        hidden = obj.get("hidden_ref")
        embed = obj.get("embed_ref")
        return TraceRecord(
            trace_id=obj["trace_id"],
            model_id=obj["model_id"],
            task=obj["task"],
            temperature=obj["temperature"],
            token_ids=tuple(token_ids) if token_ids is not None else None,
            token_count=obj.get("token_count"),
            delimiter_positions=tuple(obj["delimiter_positions"]),
            chunks=tuple(_chunk_from_json(c) for c in obj["chunks"]),
            hidden_ref=TableRef(hidden["path"], hidden["first_row"]) if hidden else None,
            embed_ref=TableRef(embed["path"], embed["first_row"]) if embed else None,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad manifest line: {exc}") from exc


def save_manifest(path: str | Path, records: Iterable[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(render_manifest_line(record))
            fh.write("\n")


def load_manifest(path: str | Path) -> list[TraceRecord]:
    return list(iter_manifest(path))


def iter_manifest(path: str | Path) -> Iterator[TraceRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield parse_manifest_line(line)
            except FormatError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
