"""Byte images of the METADATA, REPORT and RESPONSE regions.

All multi-byte integers are little-endian. Layouts::

    METADATA  aer_min:2 | aer_max:2 | trigger_state:2 | chal:32          (38 B)
    REPORT    cflog:cf_size | slice_top:2 | slice_bot:2 | prv_auth:32   (cf_size + 36 B)
    RESPONSE  vrf_auth:32 | chal_next:32 | vrf_check:2                   (66 B)

``vrf_check`` occupies a full word; only the low byte is significant.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

CHAL_SIZE = 32
TOKEN_SIZE = 32
METADATA_SIZE = 2 + 2 + 2 + CHAL_SIZE
REPORT_TRAILER = 2 + 2 + TOKEN_SIZE
RESP_SIZE = TOKEN_SIZE + CHAL_SIZE + 2
FRAME_HEADER = 4


class BadLength(ValueError):
    pass


class MalformedStream(ValueError):
    pass


def _u16(v: int) -> bytes:
    return struct.pack("<H", v)


@dataclass
class MetadataRegion:
    aer_min: int
    aer_max: int
    trigger_state: int = 0
    chal: bytes = bytes(CHAL_SIZE)

    def __post_init__(self):
        if not self.aer_min < self.aer_max:
            raise ValueError("aer_min must be below aer_max")
        if len(self.chal) != CHAL_SIZE:
            raise BadLength(f"challenge must be {CHAL_SIZE} bytes")

    def to_bytes(self) -> bytes:
        return _u16(self.aer_min) + _u16(self.aer_max) + _u16(self.trigger_state) + bytes(self.chal)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "MetadataRegion":
        if len(raw) != METADATA_SIZE:
            raise BadLength(f"METADATA is {METADATA_SIZE} bytes, got {len(raw)}")
        lo, hi, ts = struct.unpack_from("<HHH", raw)
        return cls(lo, hi, ts, bytes(raw[6:]))


@dataclass
class ReportFrame:
    """REPORT region. ``cflog`` may alias the live log buffer."""

    cflog: bytearray
    slice_top_field: int = 0
    slice_bot_field: int = 0
    prv_auth: bytes = bytes(TOKEN_SIZE)

    @property
    def cf_size(self) -> int:
        return len(self.cflog)

    @property
    def report_size(self) -> int:
        return len(self.cflog) + REPORT_TRAILER

    def trailer(self) -> bytes:
        return _u16(self.slice_top_field) + _u16(self.slice_bot_field) + bytes(self.prv_auth)

    def __getitem__(self, idx: int) -> int:
        cf = len(self.cflog)
        if idx < cf:
            return self.cflog[idx]
        return self.trailer()[idx - cf]

    def to_bytes(self) -> bytes:
        return bytes(self.cflog) + self.trailer()


@dataclass
class ResponseFrame:
    vrf_auth: bytes = bytes(TOKEN_SIZE)
    chal_next: bytes = bytes(CHAL_SIZE)
    vrf_check: int = 0

    def __post_init__(self):
        if len(self.vrf_auth) != TOKEN_SIZE or len(self.chal_next) != CHAL_SIZE:
            raise BadLength("token and challenge must be 32 bytes")
        if not 0 <= self.vrf_check <= 0xFFFF:
            raise ValueError("vrf_check must fit in a word")

    @property
    def accepted(self) -> bool:
        return (self.vrf_check & 0xFF) == 1

    def check_word(self) -> bytes:
        return _u16(self.vrf_check)

    def to_bytes(self) -> bytes:
        return bytes(self.vrf_auth) + bytes(self.chal_next) + self.check_word()


def decode_response(raw: bytes) -> ResponseFrame:
    if len(raw) != RESP_SIZE:
        raise BadLength(f"RESPONSE is {RESP_SIZE} bytes, got {len(raw)}")
    raw = bytes(raw)
    return ResponseFrame(raw[0:32], raw[32:64], struct.unpack_from("<H", raw, 64)[0])


def slice_length(slice_top: int, slice_bot: int, cf_size: int) -> int:
    return (slice_bot - slice_top) % cf_size


def report_stream_indices(slice_top: int, slice_bot: int, cf_size: int) -> list[int]:
    """REPORT indices in the order the Contention Monitor reads them."""
    n = slice_length(slice_top, slice_bot, cf_size)
    return [(slice_top + i) % cf_size for i in range(n)] + list(range(cf_size, cf_size + REPORT_TRAILER))


def encode_report_stream(report: ReportFrame, slice_top: int, slice_bot: int) -> bytes:
    cf = report.cf_size
    if slice_top % 2 or slice_bot % 2 or not (0 <= slice_top < cf and 0 <= slice_bot < cf):
        raise ValueError(f"invalid slice bounds ({slice_top}, {slice_bot}) for cf_size {cf}")
    if slice_top <= slice_bot:
        body = bytes(report.cflog[slice_top:slice_bot])
    else:
        body = bytes(report.cflog[slice_top:]) + bytes(report.cflog[:slice_bot])
    return body + report.trailer()


@dataclass(frozen=True)
class ReportStream:
    slice_bytes: bytes
    slice_top: int
    slice_bot: int
    prv_auth: bytes


def decode_report_stream(stream: bytes, cf_size: int) -> ReportStream:
    if len(stream) < REPORT_TRAILER:
        raise MalformedStream(f"stream of {len(stream)} bytes is shorter than the trailer")
    body, tail = bytes(stream[:-REPORT_TRAILER]), bytes(stream[-REPORT_TRAILER:])
    top, bot = struct.unpack_from("<HH", tail)
    if top >= cf_size or bot >= cf_size or slice_length(top, bot, cf_size) != len(body):
        raise MalformedStream(
            f"declared slice ({top}, {bot}) does not match {len(body)} body bytes")
    return ReportStream(body, top, bot, tail[4:])


def frame_message(payload: bytes) -> bytes:
    """Transport framing used by the simulated link: 4-byte LE length prefix."""
    return struct.pack("<I", len(payload)) + bytes(payload)


def split_frames(data: bytes) -> list[bytes]:
    out, i = [], 0
    while i < len(data):
        if i + FRAME_HEADER > len(data):
            raise BadLength("truncated frame header")
        (n,) = struct.unpack_from("<I", data, i)
        i += FRAME_HEADER
        if i + n > len(data):
            raise BadLength("truncated frame body")
        out.append(bytes(data[i:i + n]))
        i += n
    return out
