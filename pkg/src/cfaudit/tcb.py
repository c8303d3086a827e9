"""Trusted software procedures: dispatch, attestation, response parsing, heal."""

from __future__ import annotations

import enum
import hashlib
import hmac
import struct
from dataclasses import dataclass

from .frames import CHAL_SIZE, TOKEN_SIZE, MetadataRegion, ReportFrame, ResponseFrame
from .log import CfLog
from .monitors import Trigger

KEY_SIZE = 32
# trigger_state, aer_min, aer_max, slice_top, slice_bot after the challenge
MAC_HEADER = CHAL_SIZE + 5 * 2
AER_DIGEST = 32
RESPONSE_MAC_INPUT = CHAL_SIZE + 2 + TOKEN_SIZE


class Procedure(enum.Enum):
    ATTESTATION = "Attestation"
    RESPONSE_PARSER = "ResponseParser"
    WAIT = "Wait"


class Verdict(enum.Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    AUTH_FAIL = "AuthFail"


class HealAction(enum.Enum):
    RESET = "reset"
    ERASE_DMEM = "erase_dmem"
    HALT = "halt"
    UPDATE = "update"


@dataclass(frozen=True)
class DeviceKey:
    key: bytes

    def __post_init__(self):
        if len(self.key) != KEY_SIZE:
            raise ValueError(f"device key must be {KEY_SIZE} bytes")

    def __repr__(self):
        return "DeviceKey(<redacted>)"


@dataclass(frozen=True)
class TcbConfig:
    heal_action: HealAction = HealAction.RESET
    mac_rate: float = 8000.0
    accepted_addr: int = 0xA3F0
    send_addr: int = 0xA3F8
    dispatch_overhead: float = 200e-6
    update_image: bytes | None = None

    def __post_init__(self):
        if self.mac_rate <= 0:
            raise ValueError("mac_rate must be positive")
        if self.dispatch_overhead < 0:
            raise ValueError("dispatch_overhead must be non-negative")

    def mac_seconds(self, nbytes: int) -> float:
        return nbytes / self.mac_rate


def tcb_enter(trigger: Trigger, report_pending: bool = False) -> Procedure:
    """Pick the TCB path for a dispatched trigger.

    A T1 that arrives while an earlier report is still unacknowledged cannot
    be attested yet (the slice bounds are not latched), so it busy-waits.
    """
    if trigger is Trigger.T3:
        return Procedure.RESPONSE_PARSER
    if trigger is Trigger.T4:
        return Procedure.WAIT
    if trigger is Trigger.T1 and report_pending:
        return Procedure.WAIT
    return Procedure.ATTESTATION


def hmac_sha256(key: bytes, msg: bytes) -> bytes:
    return hmac.new(key, msg, hashlib.sha256).digest()


def attestation_input(chal: bytes, meta: MetadataRegion, slice_top: int, slice_bot: int,
                      slice_bytes: bytes, aer_digest: bytes) -> bytes:
    head = bytes(chal) + struct.pack("<HHHHH", meta.trigger_state, meta.aer_min, meta.aer_max,
                                     slice_top, slice_bot)
    return head + bytes(slice_bytes) + bytes(aer_digest)


def tcb_attest(key: DeviceKey, chal: bytes, aer_bytes: bytes, meta: MetadataRegion,
               report: ReportFrame, slice_top: int, slice_bot: int,
               aer_digest: bytes | None = None) -> tuple[bytes, int]:
    """Compute Prv_Auth for the pending slice and store it in ``report``.

    Returns ``(prv_auth, mac_input_length)``; the caller charges
    ``mac_input_length / mac_rate`` seconds of TCB time.
    """
    if aer_digest is None:
        aer_digest = hashlib.sha256(aer_bytes).digest()
    log = CfLog(report.cf_size, report.cflog)
    msg = attestation_input(chal, meta, slice_top, slice_bot,
                            log.region(slice_top, slice_bot), aer_digest)
    tag = hmac_sha256(key.key, msg)
    report.prv_auth = tag
    return tag, len(msg)


def response_input(resp: ResponseFrame, last_prv_auth: bytes) -> bytes:
    return bytes(resp.chal_next) + resp.check_word() + bytes(last_prv_auth)


def tcb_parse_response(key: DeviceKey, resp: ResponseFrame, last_prv_auth: bytes | None,
                       meta: MetadataRegion) -> Verdict:
    """Authenticate a response against the report it answers.

    With no report outstanding (``last_prv_auth`` is None) every response is
    treated as unauthenticated, so an old acceptance cannot be replayed.
    """
    if last_prv_auth is None:
        return Verdict.AUTH_FAIL
    expected = hmac_sha256(key.key, response_input(resp, last_prv_auth))
    if not hmac.compare_digest(expected, bytes(resp.vrf_auth)):
        return Verdict.AUTH_FAIL
    if resp.accepted:
        meta.chal = bytes(resp.chal_next)
        return Verdict.ACCEPTED
    return Verdict.REJECTED


@dataclass
class DeviceState:
    """The parts of prover memory a heal action touches."""

    dmem: bytearray
    aer_bytes: bytes
    log: CfLog
    key: DeviceKey
    pc: int = 0
    halted: bool = False
    resets: int = 0


def tcb_heal(cfg: TcbConfig, device: DeviceState, aer_min: int) -> HealAction:
    action = cfg.heal_action
    if action is HealAction.HALT:
        device.halted = True
        return action
    if action is HealAction.ERASE_DMEM:
        device.dmem[:] = bytes(len(device.dmem))
    elif action is HealAction.UPDATE:
        if cfg.update_image is None:
            raise ValueError("update heal needs an update image")
        device.aer_bytes = bytes(cfg.update_image)
    device_reset(device, aer_min)
    return action


def device_reset(device: DeviceState, aer_min: int) -> None:
    """Hardware reset: application restarts at AER_min, log cleared, key kept."""
    device.log.clear()
    device.pc = aer_min
    device.resets += 1


def retransmit_timeout(rtt: float, resp_time: float = 0.0) -> float:
    """Two round trips, each long enough for a whole response to arrive."""
    return 2 * (rtt + resp_time)


def retransmit_due(now: float, last_tx_end: float, rtt: float, resp_time: float = 0.0) -> bool:
    """Busy-wait resends the pending report once the timeout has passed."""
    return now >= last_tx_end + retransmit_timeout(rtt, resp_time)
