"""Discrete-event engine for one audited execution.

The prover CPU is always in exactly one of three states: running the
application, running TCB code, or busy-waiting inside the TCB. Application
time only advances in the first state, so branches are scheduled in app
time and mapped to wall time whenever the CPU resumes.

Hardware blocks are ticked only on cycles where their inputs can change
something (a log write landing on a slice boundary, a baud pulse, a
trampoline visit, a TCB exit). ``always_tick=True`` ticks them after every
log write as well; both settings produce the same trace.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field, replace

from ..channel import DOWN, UP, AdversaryScript, Hijack, Link, LinkConfig, UntrustedAccess
from ..frames import RESP_SIZE, MetadataRegion, ReportFrame, decode_response, encode_report_stream
from ..log import CfLog, Transfer, is_log_full
from ..monitors import (AccessViolation, ContentionMonitorState, CpuView, HwConfig,
                        SliceMonitorState, Trigger, TriggerState, acfa_protect, acfa_tick,
                        cm_rx_byte, cm_tx_tick, select_trigger, slice_monitor_tick)
from ..tcb import (KEY_SIZE, RESPONSE_MAC_INPUT, DeviceKey, DeviceState, HealAction, Procedure,
                   TcbConfig, Verdict, device_reset, tcb_attest, tcb_enter, tcb_heal,
                   tcb_parse_response)
from ..verifier import VrfSession, VrfVerdict, vrf_handle_report
from .metrics import NS, Metrics, Outcome, TraceRecord, trace_hash
from .workload import Workload

HORIZON = 60.0
TCB_PC = 0xA000
INF = float("inf")

APP, TCB, WAIT = "app", "tcb", "wait"

BEST_EFFORT, ACFA, CARAMEL = "best-effort", "acfa", "caramel"
KINDS = (BEST_EFFORT, ACFA, CARAMEL)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Mode:
    kind: str
    cf_size: int = 2048
    slices: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown mode {self.kind!r}")
        if self.cf_size <= 0 or self.cf_size % 4:
            raise ConfigError("cf_size must be a positive multiple of 4")
        if self.cf_size > 0x10000:
            raise ConfigError("cf_size must fit 16-bit log offsets")
        if self.slices not in (1, 2):
            raise ConfigError("slices must be 1 or 2")
        if self.kind != CARAMEL and self.slices != 1:
            object.__setattr__(self, "slices", 1)

    @classmethod
    def best_effort(cls, cf_size: int = 2048) -> "Mode":
        return cls(BEST_EFFORT, cf_size, 1)

    @classmethod
    def acfa(cls, cf_size: int = 2048) -> "Mode":
        return cls(ACFA, cf_size, 1)

    @classmethod
    def caramel(cls, cf_size: int = 2048, slices: int = 2) -> "Mode":
        return cls(CARAMEL, cf_size, slices)

    @property
    def label(self) -> str:
        if self.kind == CARAMEL:
            return f"caramel-{self.cf_size // 1024}" if self.cf_size % 1024 == 0 else f"caramel@{self.cf_size}"
        return self.kind


@dataclass
class _Pending:
    trigger: Trigger
    top: int
    bot: int
    stream: bytes | None = None


@dataclass
class SimResult:
    mode: Mode
    metrics: Metrics
    trace: list
    session: VrfSession
    transfers: list = field(repr=False)
    reports: list = field(default_factory=list, repr=False)  # genuine uplink frames, in send order

    @property
    def outcome(self) -> Outcome:
        return self.metrics.outcome

    @property
    def trace_hash(self) -> str:
        return trace_hash(self.trace)

    def trace_lines(self) -> list[str]:
        return [r.line() for r in self.trace]


class _Engine:
    def __init__(self, mode: Mode, wl: Workload, link_cfg: LinkConfig, tcb_cfg: TcbConfig,
                 adv: AdversaryScript | None, seed: int, horizon: float, always_tick: bool):
        self.mode, self.wl, self.tcb_cfg = mode, wl, tcb_cfg
        self.adv = adv or AdversaryScript()
        self.always_tick = always_tick
        self.hw_stream = mode.kind == CARAMEL and mode.slices == 2
        self.cf = cf = mode.cf_size
        cfg = wl.cfg
        self.hw = HwConfig(cf, cfg.aer_min, cfg.aer_max, tcb_cfg.accepted_addr,
                           tcb_cfg.send_addr, cf // mode.slices)
        self.link_cfg = link_cfg
        self.link = Link(link_cfg, self.adv)
        self.rtt_ns = round(link_cfg.rtt * NS)
        self.retx_ns = 2 * (self.rtt_ns + link_cfg.serialize_ns(RESP_SIZE))
        self.horizon_ns = round(horizon * NS)

        self.log = CfLog(cf)
        self.report = ReportFrame(self.log.buf)
        self.sm = SliceMonitorState.reset(self.hw) if self.hw_stream else SliceMonitorState()
        self.cm = ContentionMonitorState()
        self.ts = TriggerState()
        self.response = bytearray(RESP_SIZE)
        self.rx_idx = 0

        key = random.Random(f"key:{seed}").randbytes(KEY_SIZE)
        self.key = DeviceKey(key)
        aer = wl.aer_bytes(seed)
        self.aer_digest = hashlib.sha256(aer).digest()
        self.sess = VrfSession(key, cf, cfg.aer_min, cfg.aer_max, self.aer_digest,
                               wl.cfg_edges, rng_seed=seed)
        self.meta = MetadataRegion(cfg.aer_min, cfg.aer_max, 0, self.sess.current_chal)
        self.device = DeviceState(bytearray(256), aer, self.log, self.key, pc=cfg.aer_min)

        self.transfers = wl.transfers(seed)
        self.access_rules: dict[int, list] = {}
        for rule in self.adv.device:
            if isinstance(rule, Hijack):
                if 0 <= rule.at_branch < len(self.transfers):
                    self.transfers[rule.at_branch] = Transfer(rule.src, rule.dst)
            elif isinstance(rule, UntrustedAccess):
                self.access_rules.setdefault(rule.at_branch, []).append(rule)
            else:
                raise ConfigError(f"unknown device rule {rule!r}")
        self.times = wl.branch_times_ns(seed)
        self.end_app = round(wl.baseline_runtime * NS)
        self.n = len(self.transfers)

        self.m = Metrics()
        self.trace: list[TraceRecord] = []
        self.heap: list = []
        self.seq = 0

        self.cpu, self.cpu_since, self.app_used = APP, 0, 0
        self.app_pc = cfg.aer_min
        self.i = 0
        self.words: list[int] = []
        self.app_done = False
        self.done = False
        self.proc = None
        self.wait_reason: str | None = None
        self.pending: _Pending | None = None
        self.last_prv_auth: bytes | None = None
        self.last_tx_end = 0
        self.retx_gen = 0
        self.pulse_scheduled = False
        self.last_pulse = -1
        self.tx_bytes: list[int] = []
        self.tx_ends: list[int] = []
        self.reports: list[bytes] = []

    # -- plumbing ----------------------------------------------------------

    def rec(self, t: int, kind: str, payload: str = "") -> None:
        self.trace.append(TraceRecord(t, kind, payload))

    def push(self, t: int, kind: str, data=None) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, kind, data))

    def set_cpu(self, state: str | None, t: int) -> None:
        elapsed = t - self.cpu_since
        if self.cpu == APP:
            self.m.t_app_ns += elapsed
            self.app_used += elapsed
        elif self.cpu == TCB:
            self.m.t_tcb_ns += elapsed
        elif self.cpu == WAIT:
            self.m.t_wait_ns += elapsed
        self.cpu, self.cpu_since = state, t

    def mac_ns(self, nbytes: int) -> int:
        return round(nbytes * NS / self.tcb_cfg.mac_rate)

    @property
    def dispatch_ns(self) -> int:
        return round(self.tcb_cfg.dispatch_overhead * NS)

    def slot(self, k: int) -> int:
        c = self.link_cfg
        return k * c.bits_per_byte * NS // c.baud

    def top(self) -> int:
        return self.sm.slice_top if self.mode.kind == CARAMEL else 0

    def log_full(self) -> bool:
        return is_log_full(self.log, self.top())

    def pc(self) -> int:
        return self.app_pc if self.cpu == APP else TCB_PC

    def latch(self, trig: Trigger, t: int) -> None:
        if not self.ts.latched(trig):
            self.rec(t, "trigger", trig.name)
        self.ts = self.ts.set(trig)

    def finish(self, t: int, outcome: Outcome) -> None:
        self.set_cpu(None, t)
        self.m.outcome = outcome
        self.done = True
        self.rec(t, "end", outcome.value)

    # -- hardware ----------------------------------------------------------

    def tick(self, t: int, pc: int, t1: bool = False, baud: bool = False):
        cpu = CpuView(pc, self.cpu != APP)
        pre_acc = self.sm.vrf_acc
        was_streaming = self.cm.start_cflog
        self.sm, t2 = slice_monitor_tick(self.sm, cpu, self.log.log_ptr, t1,
                                         is_log_full(self.log, self.sm.slice_top), self.hw)
        res = cm_tx_tick(self.cm, baud, cpu, pre_acc, t1, t2, self.report,
                         self.sm.slice_top, self.sm.slice_bot, self.hw)
        self.cm = res.state
        if t2:
            self.latch(Trigger.T2, t)
        if self.cm.start_cflog and not was_streaming:
            self.rec(t, "stream_start", f"top={self.cm.read_idx}")
        if self.cm.start_cflog or self.cm.start_rem:
            self.ensure_pulse(t)
        return res

    def ensure_pulse(self, t: int) -> None:
        if self.pulse_scheduled:
            return
        c = self.link_cfg
        k = max(-(-t * c.baud // (c.bits_per_byte * NS)), self.last_pulse + 1)
        self.pulse_scheduled = True
        self.push(self.slot(k), "pulse", k)

    def burst(self, k: int) -> int:
        """Slice bytes that can go out on pulses k, k+1, ... before anything
        else happens. Such pulse ticks only move a byte, so they are folded
        into one step."""
        if self.always_tick or not self.cm.start_cflog:
            return 0
        left = (self.sm.slice_bot - self.cm.read_idx) % self.cf
        horizon = min(self.heap[0][0] if self.heap else INF, self.next_app())
        n = 0
        while n < left and self.slot(k + n) < horizon:
            n += 1
        return n

    def on_pulse(self, t: int, k: int) -> None:
        self.pulse_scheduled = False
        n = self.burst(k)
        if n > 1:
            idx, buf = self.cm.read_idx, self.log.buf
            for j in range(n):
                self.tx_bytes.append(buf[(idx + j) % self.cf])
                self.tx_ends.append(self.slot(k + j + 1))
            self.cm = replace(self.cm, read_idx=(idx + n) % self.cf)
            self.m.bytes_tx += n
            self.last_pulse = k + n - 1
            self.ensure_pulse(self.slot(k + n))
            return
        self.last_pulse = k
        res = self.tick(t, self.pc(), baud=True)
        if res.byte_out is not None:
            self.tx_bytes.append(res.byte_out)
            self.tx_ends.append(self.slot(k + 1))
            self.m.bytes_tx += 1
        if res.done:
            self.stream_done(t)
        if self.cm.finish_cflog and self.proc == "poll":
            self.send_addr(t)

    def stream_done(self, t: int) -> None:
        frame, ends = bytes(self.tx_bytes), self.tx_ends
        self.tx_bytes, self.tx_ends = [], []
        self.rec(t, "stream_done", f"len={len(frame)}")
        if self.pending is not None and self.pending.stream is None:
            self.pending.stream = frame
        self.last_tx_end = t
        self.reports.append(frame)
        self.deliver_up(self.link.carry(UP, frame, ends))
        if self.cpu == WAIT:
            self.arm_retx(t)

    # -- app side ----------------------------------------------------------

    def next_app(self) -> float:
        if self.cpu != APP or self.app_done:
            return INF
        target = self.times[self.i] if self.i < self.n else self.end_app
        return self.cpu_since + (target - self.app_used)

    def on_app(self, t: int) -> None:
        if self.i >= self.n:
            self.app_done = True
            self.app_pc = self.hw.aer_max
            self.raise_t1(t)
            if self.ts.any():
                self.dispatch(t)
            return
        for rule in self.access_rules.get(self.i, ()):
            try:
                acfa_protect(rule.actor, rule.target, rule.kind)
            except AccessViolation as exc:
                self.rec(t, "violation", str(exc).replace(" ", "_"))
                device_reset(self.device, self.hw.aer_min)
                self.finish(t, Outcome.RESET)
                return
        tr = self.transfers[self.i]
        self.i += 1
        self.words = [tr.src, tr.dst]
        self.app_pc = tr.dst
        self.write_words(t)
        if self.ts.any():
            self.dispatch(t)

    def write_words(self, t: int) -> None:
        log, cf = self.log, self.cf
        buf = log.buf
        while self.words:
            top = self.sm.slice_top if self.mode.kind == CARAMEL else 0
            if (log.log_ptr + 2) % cf == top:
                break
            w = self.words.pop(0)
            p = log.log_ptr
            buf[p] = w & 0xFF
            buf[p + 1] = w >> 8
            log.log_ptr = (p + 2) % cf
            if self.hw_stream and (self.always_tick or log.log_ptr == self.sm.bound_low):
                self.tick(t, self.app_pc)
        if self.log_full():
            self.latch(Trigger.T4, t)

    def raise_t1(self, t: int) -> None:
        pc = self.hw.aer_max
        if self.hw_stream:
            self.tick(t, pc, t1=True)
            t1 = True
        else:
            t1 = acfa_tick(CpuView(pc, False), self.hw, self.log, self.top()).t1
        if t1:
            self.latch(Trigger.T1, t)

    # -- TCB ---------------------------------------------------------------

    def dispatch(self, t: int) -> None:
        trig, self.ts = select_trigger(self.ts)
        self.m.trigger_counts[trig] += 1
        self.rec(t, "dispatch", trig.name)
        self.set_cpu(TCB, t)
        if trig is Trigger.T3:
            resp = decode_response(bytes(self.response))
            self.proc = "parse"
            self.push(t + self.dispatch_ns + self.mac_ns(RESPONSE_MAC_INPUT), "tcb", ("parse", resp))
            return
        if self.hw_stream:
            proc = tcb_enter(trig, self.pending is not None)
        elif trig in (Trigger.T1, Trigger.T4) and self.pending is None:
            proc = Procedure.ATTESTATION
        else:
            proc = Procedure.WAIT
        if proc is Procedure.WAIT:
            self.wait_reason = "t1" if trig is Trigger.T1 else "full"
            self.proc = "wait_enter"
            self.push(t + self.dispatch_ns, "tcb", ("wait_enter", None))
            return
        if self.hw_stream:
            top, bot = self.sm.slice_top, self.sm.slice_bot
        else:
            top, bot = self.top(), self.log.log_ptr
        self.meta.trigger_state = trig.bit
        self.report.slice_top_field, self.report.slice_bot_field = top, bot
        tag, n = tcb_attest(self.key, self.meta.chal, self.device.aer_bytes, self.meta,
                            self.report, top, bot, self.aer_digest)
        self.last_prv_auth = tag
        self.pending = _Pending(trig, top, bot)
        self.retx_gen += 1
        self.rec(t, "attest", f"{trig.name} top={top} bot={bot}")
        self.proc = "attest"
        self.push(t + self.dispatch_ns + self.mac_ns(n), "tcb", ("attest", trig))

    def on_tcb(self, t: int, what: str, data) -> None:
        if what == "attest":
            self.attest_done(t, data)
        elif what == "parse":
            self.parse_done(t, data)
        elif what == "send":
            self.sw_sent(t, data)
        elif what == "retx":
            self.retx_sent(t, data)
        else:
            self.resume(t)

    def attest_done(self, t: int, trig: Trigger) -> None:
        if self.hw_stream:
            if self.cm.finish_cflog:
                self.send_addr(t)
            else:
                self.proc = "poll"
            return
        p = self.pending
        stream = encode_report_stream(self.report, p.top, p.bot)
        p.stream = stream
        if self.mode.kind == BEST_EFFORT:
            # no delivery guarantee: hand the report to the UART and move on
            self.m.bytes_tx += len(stream)
            self.reports.append(stream)
            self.deliver_up(self.link.send(UP, stream, t))
            self.pending, self.last_prv_auth = None, None
            self.log.log_ptr = 0
            if trig is Trigger.T1:
                self.finish(t, Outcome.COMPLETED)
            else:
                self.resume(t)
            return
        self.proc = "send"
        self.push(t + self.link_cfg.serialize_ns(len(stream)), "tcb", ("send", t))

    def sw_ends(self, t0: int, n: int) -> list[int]:
        return [t0 + self.link_cfg.serialize_ns(k + 1) for k in range(n)]

    def sw_sent(self, t: int, t0: int) -> None:
        stream = self.pending.stream
        self.m.bytes_tx += len(stream)
        self.rec(t, "sent", f"len={len(stream)}")
        self.last_tx_end = t
        self.reports.append(stream)
        self.deliver_up(self.link.carry(UP, stream, self.sw_ends(t0, len(stream))))
        self.wait_reason = "final" if self.pending.trigger is Trigger.T1 else "full"
        self.resume(t)

    def send_addr(self, t: int) -> None:
        self.rec(t, "send_addr")
        self.tick(t, self.hw.send_addr)
        if self.pending.trigger is Trigger.T1:
            self.wait_reason = "final"
        self.resume(t)

    def parse_done(self, t: int, resp) -> None:
        verdict = tcb_parse_response(self.key, resp, self.last_prv_auth, self.meta)
        self.rec(t, "verdict", verdict.value)
        if verdict is Verdict.AUTH_FAIL:
            self.m.authfail_count += 1
            self.resume(t)
            return
        if verdict is Verdict.REJECTED:
            action = tcb_heal(self.tcb_cfg, self.device, self.hw.aer_min)
            self.rec(t, "heal", action.value)
            self.finish(t, Outcome.HALTED if action is HealAction.HALT else Outcome.HEALED)
            return
        self.m.reports_accepted += 1
        trig = self.pending.trigger
        self.pending, self.last_prv_auth = None, None
        self.retx_gen += 1
        self.rec(t, "accepted_addr")
        if self.hw_stream:
            self.tick(t, self.hw.accepted_addr)
        else:
            self.log.log_ptr = self.top()
        if trig is Trigger.T1:
            self.finish(t, Outcome.COMPLETED)
            return
        self.resume(t)

    def resume(self, t: int) -> None:
        """A TCB step finished: run the next trigger, keep waiting, or return."""
        self.proc = None
        if self.wait_reason == "t1" and self.pending is None:
            # the trapped PC is still AER_max, so T1 fires again
            self.wait_reason = None
            self.raise_t1(t)
        elif self.hw_stream:
            self.tick(t, self.app_pc)
        if self.ts.any():
            self.dispatch(t)
            return
        if self.wait_reason == "full" and not self.log_full():
            self.wait_reason = None
        if self.wait_reason is not None:
            if self.cpu != WAIT:
                self.set_cpu(WAIT, t)
            self.arm_retx(t)
            return
        self.set_cpu(APP, t)
        if self.words:
            self.write_words(t)
        elif self.log_full():
            self.latch(Trigger.T4, t)
        if self.ts.any():
            self.dispatch(t)

    def arm_retx(self, t: int) -> None:
        if self.pending is None or self.pending.stream is None:
            return
        self.retx_gen += 1
        self.push(max(t, self.last_tx_end + self.retx_ns), "retx_timer", self.retx_gen)

    def on_retx_timer(self, t: int, gen: int) -> None:
        if gen != self.retx_gen or self.cpu != WAIT or self.pending is None \
                or self.pending.stream is None:
            return
        self.set_cpu(TCB, t)
        self.proc = "retx"
        self.rec(t, "retransmit", f"len={len(self.pending.stream)}")
        self.push(t + self.link_cfg.serialize_ns(len(self.pending.stream)), "tcb", ("retx", t))

    def retx_sent(self, t: int, t0: int) -> None:
        stream = self.pending.stream
        self.m.retransmits += 1
        self.m.bytes_tx += len(stream)
        self.last_tx_end = t
        self.reports.append(stream)
        self.deliver_up(self.link.carry(UP, stream, self.sw_ends(t0, len(stream))))
        self.resume(t)

    # -- network and verifier ----------------------------------------------

    def deliver_up(self, deliveries) -> None:
        for d in deliveries:
            self.push(d.arrival, "vrf", d)

    def on_vrf(self, t: int, d) -> None:
        out = vrf_handle_report(self.sess, d.payload, respond=self.mode.kind != BEST_EFFORT)
        tag = "dup" if out.duplicate else (out.trigger.name if out.trigger else "-")
        self.rec(t, "vrf", f"{out.verdict.value} {tag} len={len(d.payload)}")
        if out.verdict is VrfVerdict.ACCEPT and not out.duplicate:
            self.m.bytes_rx += len(d.payload)
        if out.response is None:
            return
        for resp in self.link.send(DOWN, out.response.to_bytes(), t):
            if self.mode.kind == CARAMEL:
                for b, at in zip(resp.payload, resp.times):
                    self.push(at, "rx", b)
            else:
                self.push(resp.arrival, "rx_msg", resp.payload)

    def on_rx(self, t: int, byte: int) -> None:
        self.cm, t3 = cm_rx_byte(self.cm, byte, self.response)
        if t3:
            self.t3(t)

    def on_rx_msg(self, t: int, payload: bytes) -> None:
        for b in payload:
            self.response[self.rx_idx] = b
            self.rx_idx += 1
            if self.rx_idx == RESP_SIZE:
                self.rx_idx = 0
                self.t3(t)

    def t3(self, t: int) -> None:
        self.latch(Trigger.T3, t)
        if self.cpu != TCB:
            self.dispatch(t)

    # -- main loop ---------------------------------------------------------

    def run(self) -> None:
        self.rec(0, "start", f"{self.mode.label} cf={self.cf} n={self.n}")
        handlers = {
            "pulse": self.on_pulse, "tcb": lambda t, d: self.on_tcb(t, *d),
            "retx_timer": self.on_retx_timer, "vrf": self.on_vrf,
            "rx": self.on_rx, "rx_msg": self.on_rx_msg,
        }
        while not self.done:
            t_ev = self.heap[0][0] if self.heap else INF
            t_app = self.next_app()
            t_next = min(t_ev, t_app)
            if t_next > self.horizon_ns:
                self.finish(self.horizon_ns, Outcome.HORIZON)
                break
            if t_app < t_ev:
                self.on_app(int(t_app))
            else:
                t, _, kind, data = heapq.heappop(self.heap)
                handlers[kind](t, data)
        if self.mode.kind == BEST_EFFORT:
            # reports still on the wire reach the verifier after the prover is done
            for t, _, kind, data in sorted(self.heap):
                if kind == "vrf":
                    self.on_vrf(t, data)


def run_simulation(mode: Mode, workload: Workload, link: LinkConfig | None = None,
                   tcb_cfg: TcbConfig | None = None, adv: AdversaryScript | None = None,
                   seed: int = 0, horizon: float = HORIZON, always_tick: bool = False) -> SimResult:
    eng = _Engine(mode, workload, link or LinkConfig(), tcb_cfg or TcbConfig(), adv, seed,
                  horizon, always_tick)
    eng.run()
    return SimResult(mode, eng.m, eng.trace, eng.sess, eng.transfers, eng.reports)
