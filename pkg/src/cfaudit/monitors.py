"""Register-level models of the prover's hardware monitors.

Each ``*_tick`` function is one clock edge: every rule reads the pre-state
and the inputs sampled in that cycle, and the returned state is the set of
register updates applied together.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .frames import RESP_SIZE, REPORT_TRAILER
from .log import CfLog, incr, is_log_full


class Trigger(enum.IntEnum):
    T1 = 1  # audited execution ended
    T2 = 2  # slice full
    T3 = 3  # response received
    T4 = 4  # whole log full

    @property
    def bit(self) -> int:
        return 1 << (self.value - 1)


# T3 first: a parsed response can clear the conditions behind T4 and T2.
TRIGGER_PRIORITY = (Trigger.T3, Trigger.T4, Trigger.T2, Trigger.T1)


class NoTrigger(LookupError):
    pass


@dataclass(frozen=True, slots=True)
class HwConfig:
    cf_size: int
    aer_min: int
    aer_max: int
    accepted_addr: int
    send_addr: int
    slice_size: int | None = None

    def __post_init__(self):
        if self.slice_size is None:
            object.__setattr__(self, "slice_size", self.cf_size // 2)
        if self.cf_size % self.slice_size or self.slice_size % 2:
            raise ValueError("slice_size must be even and divide cf_size")
        if not self.aer_min < self.aer_max:
            raise ValueError("AER bounds out of order")

    @property
    def report_size(self) -> int:
        return self.cf_size + REPORT_TRAILER


@dataclass(frozen=True, slots=True)
class CpuView:
    pc: int
    in_tcb: bool = False


@dataclass(frozen=True, slots=True)
class TriggerState:
    t1: bool = False
    t2: bool = False
    t3: bool = False
    t4: bool = False

    def latched(self, trig: Trigger) -> bool:
        return getattr(self, trig.name.lower())

    def set(self, trig: Trigger, value: bool = True) -> "TriggerState":
        return replace(self, **{trig.name.lower(): value})

    def any(self) -> bool:
        return self.t1 or self.t2 or self.t3 or self.t4


def select_trigger(ts: TriggerState) -> tuple[Trigger, TriggerState]:
    """Pick the dispatch cause; it is cleared and the rest stay latched."""
    for trig in TRIGGER_PRIORITY:
        if ts.latched(trig):
            return trig, ts.set(trig, False)
    raise NoTrigger("no trigger latched")


# -- ACFA block ------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class AcfaOutputs:
    t1: bool
    t4: bool
    log_enable: bool


def acfa_tick(cpu: CpuView, hw: HwConfig, log: CfLog, slice_top: int) -> AcfaOutputs:
    in_aer = hw.aer_min <= cpu.pc <= hw.aer_max
    return AcfaOutputs(
        t1=cpu.pc == hw.aer_max,
        t4=is_log_full(log, slice_top),
        log_enable=in_aer and not cpu.in_tcb,
    )


class Region(enum.Enum):
    TCB_CODE = "tcb_code"
    CFLOG = "cflog"
    KEY = "key"
    CARAMEL_DATA = "caramel_data"
    CMUART_CONFIG = "cmuart_config"
    OTHER = "other"


class Actor(enum.Enum):
    UNTRUSTED = "untrusted"
    TCB = "tcb"


class AccessViolation(Exception):
    """Illegal access to a protected region; the device is reset."""

    def __init__(self, actor: Actor, target: Region, kind: str):
        super().__init__(f"{actor.value} {kind} of {target.value}")
        self.actor, self.target, self.kind = actor, target, kind


PROTECTED = {Region.TCB_CODE, Region.CFLOG, Region.KEY, Region.CARAMEL_DATA, Region.CMUART_CONFIG}


def acfa_protect(actor: Actor, target: Region, kind: str) -> None:
    if kind not in ("read", "write"):
        raise ValueError(f"unknown access kind {kind!r}")
    if actor is Actor.TCB:
        return
    if target is Region.KEY or (kind == "write" and target in PROTECTED):
        raise AccessViolation(actor, target, kind)


# -- Slice Monitor ---------------------------------------------------------

@dataclass(frozen=True, slots=True)
class SliceMonitorState:
    slice_top: int = 0
    slice_bot: int = 0
    bound_low: int = 0
    vrf_acc: bool = True
    slice_full: bool = False

    @classmethod
    def reset(cls, hw: HwConfig) -> "SliceMonitorState":
        return cls(bound_low=hw.slice_size % hw.cf_size)


def slice_monitor_tick(s: SliceMonitorState, cpu: CpuView, log_ptr: int, t1: bool,
                       log_full: bool, hw: HwConfig) -> tuple[SliceMonitorState, bool]:
    cf, size = hw.cf_size, hw.slice_size
    slice_full = log_ptr == s.bound_low
    t2 = slice_full and s.vrf_acc

    vrf_acc, slice_top = s.vrf_acc, s.slice_top
    if cpu.pc == hw.accepted_addr:
        vrf_acc = True
        slice_top = incr(s.slice_top, size, cf)
    if t2:
        vrf_acc = False

    bound_low = s.bound_low
    if slice_full and not log_full:
        bound_low = incr(s.bound_low, size, cf)

    slice_bot = s.slice_bot
    if t2:
        slice_bot = s.bound_low
    elif t1 and s.vrf_acc:
        slice_bot = log_ptr

    return SliceMonitorState(slice_top, slice_bot, bound_low, vrf_acc, slice_full), t2


# -- Contention Monitor ----------------------------------------------------

@dataclass(frozen=True, slots=True)
class ContentionMonitorState:
    t1_pend: bool = False
    t2_pend: bool = False
    read_idx: int = 0
    start_cflog: bool = False
    finish_cflog: bool = False
    start_rem: bool = False
    write_idx: int = 0

    @property
    def tx_pend(self) -> bool:
        return self.t1_pend or self.t2_pend

    @property
    def transmitting(self) -> bool:
        return self.start_cflog or self.finish_cflog or self.start_rem


@dataclass(frozen=True, slots=True)
class TxResult:
    state: ContentionMonitorState
    byte_out: int | None = None
    done: bool = False  # the last REPORT byte has left the transmit buffer


def cm_tx_tick(c: ContentionMonitorState, baud_pulse: bool, cpu: CpuView, vrf_acc: bool,
               t1: bool, t2: bool, report, slice_top: int, slice_bot: int,
               hw: HwConfig) -> TxResult:
    """One Contention Monitor cycle on the transmit side.

    ``report`` is anything indexable by REPORT offset. Byte movement (and the
    completion check) happens only on ``baud_pulse``; registration, start
    and the send_addr hand-off are sampled every cycle so short pulses are
    not missed.
    """
    cf, rsize = hw.cf_size, hw.report_size
    t1_pend, t2_pend = c.t1_pend, c.t2_pend
    read_idx = c.read_idx
    start_cflog, finish, start_rem = c.start_cflog, c.finish_cflog, c.start_rem
    byte_out = None
    done = False

    if baud_pulse:
        if c.start_cflog:
            if c.read_idx == slice_bot:
                start_cflog, finish = False, True
            else:
                byte_out = report[c.read_idx]
                read_idx = incr(c.read_idx, 1, cf)
        elif c.start_rem:
            if c.read_idx == rsize:
                start_rem, finish, done = False, False, True
            else:
                byte_out = report[c.read_idx]
                read_idx = c.read_idx + 1

    # completion clears t2_pend first; t1_pend only once t2_pend was already clear
    if done:
        if c.t2_pend:
            t2_pend = False
        elif c.t1_pend:
            t1_pend = False
    if t2:
        t2_pend = True
    if t1:
        t1_pend = True

    idle = not (c.start_cflog or c.finish_cflog or c.start_rem)
    if (c.t1_pend or c.t2_pend or t1 or t2) and idle and vrf_acc:
        start_cflog = True
        read_idx = slice_top

    if c.finish_cflog and cpu.pc == hw.send_addr:
        start_rem = True
        read_idx = cf

    state = ContentionMonitorState(t1_pend, t2_pend, read_idx, start_cflog, finish,
                                   start_rem, c.write_idx)
    return TxResult(state, byte_out, done)


def cm_rx_byte(c: ContentionMonitorState, data_rx: int,
               response: bytearray) -> tuple[ContentionMonitorState, bool]:
    """Store one received byte in RESPONSE; returns ``(state, t3)``."""
    response[c.write_idx] = data_rx
    write_idx = c.write_idx + 1
    t3 = write_idx == RESP_SIZE
    if t3:
        write_idx = 0
    return replace(c, write_idx=write_idx), t3
