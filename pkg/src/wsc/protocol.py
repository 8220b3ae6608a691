"""Length-prefixed binary frames for the chop-decision sidecar.

Frame layout: u32 body length, then a type byte and the payload. All
integers and floats little-endian. Binary (not text) because one chunk
event can carry a 4096-dim float32 hidden state and the service sits on
the decoding hot path.

    HELLO        0x01  hidden_dim u32
    CHUNK_EVENT  0x02  stream_id u64, chunk_len u32, dim u32, dim * f32
    DECISION     0x03  stream_id u64, action u8 (0 continue / 1 chop),
                       probability f32, regen_budget u32 (0 when continue)
    RESET        0x04  stream_id u64
    ERROR        0x05  code (u8 length + ascii), message (u16 length + utf-8)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError

FRAME_HELLO = 0x01
FRAME_CHUNK_EVENT = 0x02
FRAME_DECISION = 0x03
FRAME_RESET = 0x04
FRAME_ERROR = 0x05

ACTION_CONTINUE = 0
ACTION_CHOP = 1

# generous bound: dim 4096 events are ~16 KiB
MAX_BODY_SIZE = 1 << 20

_PREFIX = struct.Struct("<I")
_HELLO = struct.Struct("<I")
_EVENT_HEAD = struct.Struct("<QII")
_DECISION = struct.Struct("<QBfI")
_RESET = struct.Struct("<Q")


@dataclass(frozen=True)
class Hello:
    hidden_dim: int


class ChunkEvent:
    """One chunk boundary: stream id, chunk length, trailing hidden state."""

    __slots__ = ("stream_id", "chunk_len", "hidden")

    def __init__(self, stream_id: int, chunk_len: int, hidden: np.ndarray) -> None:
        self.stream_id = stream_id
        self.chunk_len = chunk_len
        self.hidden = np.ascontiguousarray(hidden, dtype=np.float32)
        if self.hidden.ndim != 1:
            raise ValueError(f"hidden state must be 1-D, got shape {self.hidden.shape}")

    @property
    def dim(self) -> int:
        return self.hidden.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChunkEvent):
            return NotImplemented
        return (
            self.stream_id == other.stream_id
            and self.chunk_len == other.chunk_len
            and bool(np.array_equal(self.hidden, other.hidden))
        )

    def __repr__(self) -> str:
        return (
            f"ChunkEvent(stream_id={self.stream_id}, chunk_len={self.chunk_len}, "
            f"dim={self.dim})"
        )


@dataclass(frozen=True)
class Decision:
    stream_id: int
    action: int
    probability: float
    regen_budget: int


@dataclass(frozen=True)
class Reset:
    stream_id: int


@dataclass(frozen=True)
class ErrorFrame:
    code: str
    message: str


Frame = Hello | ChunkEvent | Decision | Reset | ErrorFrame


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame, length prefix included."""
    if isinstance(frame, Hello):
        body = bytes([FRAME_HELLO]) + _HELLO.pack(frame.hidden_dim)
    elif isinstance(frame, ChunkEvent):
        body = (
            bytes([FRAME_CHUNK_EVENT])
            + _EVENT_HEAD.pack(frame.stream_id, frame.chunk_len, frame.dim)
            + frame.hidden.astype("<f4", copy=False).tobytes()
        )
    elif isinstance(frame, Decision):
        if frame.action not in (ACTION_CONTINUE, ACTION_CHOP):
            raise ValueError(f"bad action {frame.action}")
        body = bytes([FRAME_DECISION]) + _DECISION.pack(
            frame.stream_id, frame.action, frame.probability, frame.regen_budget
        )
    elif isinstance(frame, Reset):
        body = bytes([FRAME_RESET]) + _RESET.pack(frame.stream_id)
    elif isinstance(frame, ErrorFrame):
        code = frame.code.encode("ascii")
        message = frame.message.encode("utf-8")
        if len(code) > 0xFF:
            raise ValueError("error code too long")
        if len(message) > 0xFFFF:
            raise ValueError("error message too long")
        body = (
            bytes([FRAME_ERROR, len(code)])
            + code
            + struct.pack("<H", len(message))
            + message
        )
    else:
        raise TypeError(f"not a frame: {frame!r}")
    return _PREFIX.pack(len(body)) + body


def decode_body(body: bytes) -> Frame:
    """Parse a frame body (everything after the length prefix)."""
    if not body:
        raise ProtocolError("empty frame body")
    ftype = body[0]
    payload = body[1:]
    if ftype == FRAME_HELLO:
        if len(payload) != _HELLO.size:
            raise ProtocolError("bad HELLO payload length")
        return Hello(hidden_dim=_HELLO.unpack(payload)[0])
    if ftype == FRAME_CHUNK_EVENT:
        if len(payload) < _EVENT_HEAD.size:
            raise ProtocolError("truncated CHUNK_EVENT payload")
        stream_id, chunk_len, dim = _EVENT_HEAD.unpack_from(payload)
        vec = payload[_EVENT_HEAD.size :]
        if len(vec) != dim * 4:
            raise ProtocolError(
                f"CHUNK_EVENT payload {len(vec)} bytes, expected {dim * 4}"
            )
        hidden = np.frombuffer(vec, dtype="<f4")
        return ChunkEvent(stream_id=stream_id, chunk_len=chunk_len, hidden=hidden)
    if ftype == FRAME_DECISION:
        if len(payload) != _DECISION.size:
            raise ProtocolError("bad DECISION payload length")
        stream_id, action, probability, regen_budget = _DECISION.unpack(payload)
        return Decision(
            stream_id=stream_id,
            action=action,
            probability=probability,
            regen_budget=regen_budget,
        )
    if ftype == FRAME_RESET:
        if len(payload) != _RESET.size:
            raise ProtocolError("bad RESET payload length")
        return Reset(stream_id=_RESET.unpack(payload)[0])
    if ftype == FRAME_ERROR:
        if len(payload) < 1:
            raise ProtocolError("truncated ERROR payload")
        code_len = payload[0]
        rest = payload[1:]
        if len(rest) < code_len + 2:
            raise ProtocolError("truncated ERROR payload")
        code = rest[:code_len].decode("ascii")
        (msg_len,) = struct.unpack_from("<H", rest, code_len)
        msg_bytes = rest[code_len + 2 :]
        if len(msg_bytes) != msg_len:
            raise ProtocolError("bad ERROR message length")
        return ErrorFrame(code=code, message=msg_bytes.decode("utf-8"))
    raise ProtocolError(f"unknown frame type {ftype:#x}")


def decode_frame(data: bytes) -> Frame:
    """Parse one complete frame (length prefix included)."""
    if len(data) < _PREFIX.size:
        raise ProtocolError("truncated frame")
    (length,) = _PREFIX.unpack_from(data)
    if length > MAX_BODY_SIZE:
        raise ProtocolError(f"frame body {length} exceeds limit {MAX_BODY_SIZE}")
    body = data[_PREFIX.size :]
    if len(body) != length:
        raise ProtocolError(f"frame body {len(body)} bytes, prefix says {length}")
    return decode_body(body)


def read_frame(sock_file) -> Frame | None:
    """Read one frame from a binary file-like; None at clean end-of-stream."""
    prefix = sock_file.read(_PREFIX.size)
    if not prefix:
        return None
    if len(prefix) < _PREFIX.size:
        raise ProtocolError("truncated frame prefix")
    (length,) = _PREFIX.unpack(prefix)
    if length > MAX_BODY_SIZE:
        raise ProtocolError(f"frame body {length} exceeds limit {MAX_BODY_SIZE}")
    body = sock_file.read(length)
    if len(body) < length:
        raise ProtocolError("truncated frame body")
    return decode_body(body)
