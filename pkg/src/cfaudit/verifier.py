"""Remote verifier: report validation, responses and trace reassembly."""

from __future__ import annotations

import enum
import hashlib
import hmac
import random
from dataclasses import dataclass, field

from .frames import (CHAL_SIZE, MalformedStream, MetadataRegion, ResponseFrame,
                     decode_report_stream)
from .log import Transfer, decode_transfers
from .monitors import Trigger
from .tcb import attestation_input, hmac_sha256, response_input

# Trigger-state candidates tried when the stream does not say which trigger fired.
REPORT_TRIGGERS = (Trigger.T2, Trigger.T1, Trigger.T4)


class VrfVerdict(enum.Enum):
    ACCEPT = "Accept"
    REJECT_AUTH = "RejectAuth"
    REJECT_PATH = "RejectPath"


class DanglingSession(RuntimeError):
    pass


@dataclass(frozen=True)
class PathPolicy:
    allowed_edges: frozenset
    entry: int
    exit: int

    def allows(self, t: Transfer) -> bool:
        return (t.src, t.dst) in self.allowed_edges


@dataclass(frozen=True)
class Declared:
    trigger_state: int
    aer_min: int
    aer_max: int
    aer_digest: bytes


@dataclass
class VrfSession:
    key: bytes
    cf_size: int
    aer_min: int
    aer_max: int
    aer_digest: bytes
    policy: PathPolicy
    rng_seed: int = 0
    initial_chal: bytes | None = None
    current_chal: bytes = field(init=False)
    accepted_slices: list = field(default_factory=list, init=False)
    accepted_triggers: list = field(default_factory=list, init=False)
    last_seen_prv_auth: bytes = field(default=bytes(32), init=False)
    carry: bytes = field(default=b"", init=False)
    last_accepted_stream: bytes | None = field(default=None, init=False)
    last_response: ResponseFrame | None = field(default=None, init=False)
    issued_chals: list = field(default_factory=list, init=False)

    def __post_init__(self):
        self._rng = random.Random(self.rng_seed)
        self.current_chal = self.initial_chal if self.initial_chal is not None else self.fresh_chal()

    def fresh_chal(self) -> bytes:
        c = self._rng.randbytes(CHAL_SIZE)
        self.issued_chals.append(c)
        return c

    def declared(self, trigger: Trigger) -> Declared:
        return Declared(trigger.bit, self.aer_min, self.aer_max, self.aer_digest)


def vrf_validate_report(sess: VrfSession, stream: bytes, declared: Declared) -> VrfVerdict:
    """Check authenticity, then path policy; on Accept the slice is recorded."""
    rep = decode_report_stream(stream, sess.cf_size)
    meta = MetadataRegion(declared.aer_min, declared.aer_max, declared.trigger_state)
    msg = attestation_input(sess.current_chal, meta, rep.slice_top, rep.slice_bot,
                            rep.slice_bytes, declared.aer_digest)
    if not hmac.compare_digest(hmac_sha256(sess.key, msg), rep.prv_auth):
        return VrfVerdict.REJECT_AUTH
    sess.last_seen_prv_auth = rep.prv_auth
    joined = sess.carry + rep.slice_bytes
    whole = len(joined) - len(joined) % 4
    for t in decode_transfers(joined[:whole]):
        if not sess.policy.allows(t):
            return VrfVerdict.REJECT_PATH
    sess.carry = joined[whole:]
    sess.accepted_slices.append(rep.slice_bytes)
    sess.accepted_triggers.append(declared.trigger_state)
    sess.last_accepted_stream = bytes(stream)
    return VrfVerdict.ACCEPT


def vrf_make_response(sess: VrfSession, verdict: VrfVerdict,
                      bound_prv_auth: bytes | None = None) -> ResponseFrame:
    """Build the authenticated reply; the challenge only advances on Accept."""
    chal_next = sess.fresh_chal()
    check = 1 if verdict is VrfVerdict.ACCEPT else 0
    auth_for = sess.last_seen_prv_auth if bound_prv_auth is None else bound_prv_auth
    resp = ResponseFrame(bytes(32), chal_next, check)
    resp = ResponseFrame(hmac_sha256(sess.key, response_input(resp, auth_for)), chal_next, check)
    if verdict is VrfVerdict.ACCEPT:
        sess.current_chal = chal_next
    sess.last_response = resp
    return resp


@dataclass(frozen=True)
class ReportOutcome:
    verdict: VrfVerdict
    trigger: Trigger | None
    response: ResponseFrame | None
    duplicate: bool = False


def vrf_handle_report(sess: VrfSession, stream: bytes, respond: bool = True) -> ReportOutcome:
    """Validate an incoming report stream and produce the reply.

    A byte-identical copy of the last accepted report is a retransmission
    whose acknowledgement was lost: the cached reply is sent again and the
    slice is not recorded twice.
    """
    stream = bytes(stream)
    if stream == sess.last_accepted_stream and sess.last_response is not None:
        return ReportOutcome(VrfVerdict.ACCEPT, None, sess.last_response if respond else None, True)
    try:
        rep = decode_report_stream(stream, sess.cf_size)
    except MalformedStream:
        rep = None
    verdict, trigger = VrfVerdict.REJECT_AUTH, None
    if rep is not None:
        for trig in REPORT_TRIGGERS:
            v = vrf_validate_report(sess, stream, sess.declared(trig))
            if v is not VrfVerdict.REJECT_AUTH:
                verdict, trigger = v, trig
                break
    resp = None
    if respond:
        bound = rep.prv_auth if rep is not None else bytes(32)
        resp = vrf_make_response(sess, verdict, bound)
    return ReportOutcome(verdict, trigger, resp)


def vrf_reassemble(sess: VrfSession) -> list[Transfer]:
    if not sess.accepted_triggers or sess.accepted_triggers[-1] != Trigger.T1.bit:
        raise DanglingSession("session has no accepted end-of-execution report")
    return decode_transfers(b"".join(sess.accepted_slices))


def aer_digest(aer_bytes: bytes) -> bytes:
    return hashlib.sha256(aer_bytes).digest()
