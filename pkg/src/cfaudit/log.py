"""Control-flow log ring buffer.

The log is a byte ring of ``cf_size`` bytes split into two slices. Entries
are 16-bit little-endian words; one control-flow transfer is two words
(source address, then destination address).
"""

from __future__ import annotations

from dataclasses import dataclass, field

WORD = 2
TRANSFER_BYTES = 4


class AppendWhileFull(RuntimeError):
    """A word write was attempted while the log reported full."""


def incr(base: int, delta: int, cf_size: int) -> int:
    """Wrapping increment of a log offset."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return (base + delta) % cf_size


@dataclass(frozen=True, slots=True)
class Transfer:
    src: int
    dst: int

    def __post_init__(self):
        for v in (self.src, self.dst):
            if not 0 <= v <= 0xFFFF:
                raise ValueError(f"address {v:#x} outside 16-bit range")

    def to_bytes(self) -> bytes:
        return self.src.to_bytes(2, "little") + self.dst.to_bytes(2, "little")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Transfer":
        return cls(int.from_bytes(raw[0:2], "little"), int.from_bytes(raw[2:4], "little"))


@dataclass(slots=True)
class CfLog:
    cf_size: int
    buf: bytearray = field(default=None, repr=False)
    log_ptr: int = 0

    def __post_init__(self):
        if self.cf_size <= 0 or self.cf_size % 4:
            raise ValueError(f"cf_size must be a positive multiple of 4, got {self.cf_size}")
        if self.buf is None:
            self.buf = bytearray(self.cf_size)
        elif len(self.buf) != self.cf_size:
            raise ValueError("buffer length does not match cf_size")
        if self.log_ptr % 2 or not 0 <= self.log_ptr < self.cf_size:
            raise ValueError(f"bad log_ptr {self.log_ptr}")

    @property
    def slice_size(self) -> int:
        return self.cf_size // 2

    def clear(self) -> None:
        self.buf[:] = bytes(self.cf_size)
        self.log_ptr = 0

    def region(self, start: int, end: int) -> bytes:
        """Bytes of ``[start, end)`` in wrapped order; ``start == end`` is empty."""
        if start <= end:
            return bytes(self.buf[start:end])
        return bytes(self.buf[start:]) + bytes(self.buf[:end])


def is_log_full(log: CfLog, slice_top: int) -> bool:
    return incr(log.log_ptr, WORD, log.cf_size) == slice_top


def append_word(log: CfLog, word: int, slice_top: int | None = None) -> CfLog:
    """Store ``word`` at ``log_ptr`` and advance the pointer.

    When ``slice_top`` is given the write is gated on the full predicate, as
    the hardware does.
    """
    if slice_top is not None and is_log_full(log, slice_top):
        raise AppendWhileFull(f"log full at offset {log.log_ptr} (slice_top={slice_top})")
    p = log.log_ptr
    log.buf[p] = word & 0xFF
    log.buf[p + 1] = (word >> 8) & 0xFF
    log.log_ptr = incr(p, WORD, log.cf_size)
    return log


def append_transfer(log: CfLog, t: Transfer, slice_top: int | None = None) -> CfLog:
    append_word(log, t.src, slice_top)
    append_word(log, t.dst, slice_top)
    return log


def decode_transfers(raw: bytes) -> list[Transfer]:
    if len(raw) % TRANSFER_BYTES:
        raise ValueError(f"{len(raw)} bytes is not a whole number of transfer records")
    return [Transfer.from_bytes(raw[i:i + 4]) for i in range(0, len(raw), TRANSFER_BYTES)]
