"""Shared exception types.

Validation problems (bad arguments, degenerate data, contract violations)
raise ValueError or WscError; file/stream format problems raise FormatError
so the CLI can map them to the I/O exit code.
"""

from __future__ import annotations


class WscError(Exception):
    """Base class for errors raised by this package."""


class FormatError(WscError):
    """A file or frame does not conform to its binary/text format."""


class ProtocolError(FormatError):
    """A wire frame is malformed; the connection must be closed."""
