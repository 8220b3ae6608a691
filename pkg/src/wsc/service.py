"""Streaming sidecar service for live chop decisions.

The service is advisory: it classifies hidden states and answers with
continue/chop decisions; truncation and prompt injection stay in the
caller's inference engine, which keeps the component engine-agnostic.

Per connection: a HELLO carrying the hidden dimension must precede chunk
events; each CHUNK_EVENT is answered by one DECISION in order; RESET
discards a stream's detector state. A dimension mismatch earns an ERROR
frame and the connection stays open; a malformed frame earns an ERROR and
the connection is closed. Streams are independent; each connection has its
own detector states, so many generations can be served concurrently.
"""

from __future__ import annotations

import socket
import socketserver
import threading

from .errors import ProtocolError
from .policy import ChopAction, DetectorState, PolicyConfig, on_chunk_boundary
from .probe import ProbeModel, predict
from .protocol import (
    ACTION_CHOP,
    ACTION_CONTINUE,
    ChunkEvent,
    Decision,
    ErrorFrame,
    Frame,
    Hello,
    Reset,
    encode_frame,
    read_frame,
)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: ChopServer = self.server  # type: ignore[assignment]
        ready = False
        streams: dict[int, DetectorState] = {}
        while True:
            try:
                frame = read_frame(self.rfile)
            except ProtocolError as exc:
                self._send(ErrorFrame(code="malformed", message=str(exc)))
                return
            if frame is None:
                return
            try:
                keep_open = self._dispatch(server, frame, streams, ready)
            except BrokenPipeError:
                return
            if keep_open is None:
                return
            ready = ready or keep_open

    def _dispatch(
        self,
        server: "ChopServer",
        frame: Frame,
        streams: dict[int, DetectorState],
        ready: bool,
    ) -> bool | None:
        """Handle one frame; returns hello-accepted flag, or None to close."""
        if isinstance(frame, Hello):
            if frame.hidden_dim != server.model.dim:
                self._send(
                    ErrorFrame(
                        code="dim_mismatch",
                        message=f"model dim {server.model.dim}, got {frame.hidden_dim}",
                    )
                )
                return False
            return True
        if isinstance(frame, ChunkEvent):
            if not ready:
                self._send(
                    ErrorFrame(code="protocol", message="CHUNK_EVENT before HELLO")
                )
                return None
            if frame.dim != server.model.dim:
                self._send(
                    ErrorFrame(
                        code="dim_mismatch",
                        message=f"model dim {server.model.dim}, got {frame.dim}",
                    )
                )
                return False
            state = streams.setdefault(frame.stream_id, DetectorState())
            p = predict(server.model, frame.hidden)
            try:
                decision = on_chunk_boundary(state, p, frame.chunk_len, server.config)
            except ValueError as exc:
                self._send(ErrorFrame(code="stream_chopped", message=str(exc)))
                return False
            self._send(
                Decision(
                    stream_id=frame.stream_id,
                    action=ACTION_CHOP if decision.action is ChopAction.CHOP else ACTION_CONTINUE,
                    probability=decision.probability,
                    regen_budget=decision.regen.budget if decision.regen else 0,
                )
            )
            return False
        if isinstance(frame, Reset):
            streams.pop(frame.stream_id, None)
            return False
        # clients must not send DECISION or ERROR frames
        self._send(ErrorFrame(code="protocol", message="unexpected frame type"))
        return None

    def _send(self, frame: Frame) -> None:
        self.wfile.write(encode_frame(frame))
        self.wfile.flush()


class ChopServer(socketserver.ThreadingTCPServer):
    """TCP server answering chunk events with chop decisions."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], model: ProbeModel, config: PolicyConfig):
        self.model = model
        self.config = config
        super().__init__(address, _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start_background(self, poll_interval: float = 0.05) -> threading.Thread:
        thread = threading.Thread(
            target=self.serve_forever, kwargs={"poll_interval": poll_interval}, daemon=True
        )
        thread.start()
        return thread


def serve(host: str, port: int, model: ProbeModel, config: PolicyConfig) -> None:
    """Run the sidecar until interrupted."""
    with ChopServer((host, port), model, config) as server:
        server.serve_forever()


class ChopClient:
    """Minimal blocking client, used by tests and as a reference integration."""

    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))
        self._file = self._sock.makefile("rwb")

    def send(self, frame: Frame) -> None:
        self._file.write(encode_frame(frame))
        self._file.flush()

    def send_raw(self, data: bytes) -> None:
        self._file.write(data)
        self._file.flush()

    def recv(self) -> Frame | None:
        return read_frame(self._file)

    def request(self, frame: Frame) -> Frame | None:
        self.send(frame)
        return self.recv()

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()

    def __enter__(self) -> "ChopClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
