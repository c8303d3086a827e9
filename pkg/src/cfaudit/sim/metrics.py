"""Per-run accounting and the comparisons drawn between runs."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from ..monitors import Trigger

NS = 1_000_000_000


class Outcome(enum.Enum):
    COMPLETED = "completed"
    HEALED = "healed"
    HALTED = "halted"
    RESET = "reset"
    HORIZON = "horizon"

    @property
    def exit_code(self) -> int:
        if self is Outcome.COMPLETED:
            return 0
        if self is Outcome.HORIZON:
            return 3
        return 2


@dataclass
class Metrics:
    """Times are kept in integer nanoseconds; the float views are derived."""

    t_app_ns: int = 0
    t_tcb_ns: int = 0
    t_wait_ns: int = 0
    trigger_counts: dict = field(default_factory=lambda: {t: 0 for t in Trigger})
    bytes_tx: int = 0
    bytes_rx: int = 0
    authfail_count: int = 0
    retransmits: int = 0
    reports_accepted: int = 0
    outcome: Outcome = Outcome.COMPLETED
    overhead_vs_baseline: float | None = None

    @property
    def t_app(self) -> float:
        return self.t_app_ns / NS

    @property
    def t_tcb(self) -> float:
        return self.t_tcb_ns / NS

    @property
    def t_wait(self) -> float:
        return self.t_wait_ns / NS

    @property
    def total_runtime_ns(self) -> int:
        return self.t_app_ns + self.t_tcb_ns + self.t_wait_ns

    @property
    def total_runtime(self) -> float:
        return self.total_runtime_ns / NS

    @property
    def utilization(self) -> float:
        """Share of the session spent running the application."""
        total = self.total_runtime_ns
        return self.t_app_ns / total if total else 1.0

    @property
    def app_tcb_ratio(self) -> float:
        """Application time per unit of time spent in the TCB (attesting,
        parsing or busy-waiting)."""
        stalled = self.t_tcb_ns + self.t_wait_ns
        return self.t_app_ns / stalled if stalled else float("inf")

    def count(self, trig: Trigger) -> int:
        return self.trigger_counts[trig]


def compute_overhead(m: Metrics, baseline: Metrics) -> float:
    base = baseline.total_runtime_ns
    return 100.0 * (m.total_runtime_ns - base) / base


def compute_utilization_gain(m: Metrics, acfa: Metrics) -> float:
    """Relative gain in application-to-TCB time ratio over an ACFA run."""
    return 100.0 * (m.app_tcb_ratio - acfa.app_tcb_ratio) / acfa.app_tcb_ratio


def utilization_share_gain(m: Metrics, acfa: Metrics) -> float:
    """The same comparison using the plain share ``t_app / total``."""
    return 100.0 * (m.utilization - acfa.utilization) / acfa.utilization


@dataclass(frozen=True)
class TraceRecord:
    time_ns: int
    kind: str
    payload: str = ""

    def line(self) -> str:
        return f"{self.time_ns} {self.kind} {self.payload}".rstrip()


def trace_hash(trace) -> str:
    h = hashlib.sha256()
    for rec in trace:
        h.update(rec.line().encode())
        h.update(b"\n")
    return h.hexdigest()
