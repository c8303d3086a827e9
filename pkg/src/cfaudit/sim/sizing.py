"""How large must the log be for streaming to keep up with logging?

Two answers are provided. ``min_contention_free_log_size`` is the closed-form
bound C > 2RNl/(1 - Rl), which treats MAC computation and transmission as
one serial pipeline running while the application keeps logging.
``stall_aware_log_size`` follows the engine's timing model instead: the
application is halted while the TCB computes the MAC and until the slice
body has left, so only the trailer, the response and the round trip have
to be covered by the other slice's free space.
``contention_threshold`` measures the answer by simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..channel import LinkConfig
from ..frames import CHAL_SIZE, METADATA_SIZE, REPORT_TRAILER, RESP_SIZE, TOKEN_SIZE
from ..log import TRANSFER_BYTES
from ..monitors import Trigger
from ..tcb import TcbConfig
from .engine import Mode, run_simulation
from .workload import Workload


class _Unbounded:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Unbounded"


Unbounded = _Unbounded()


@dataclass(frozen=True)
class SizingParams:
    M: float  # MAC throughput, bytes/s
    B: float  # channel throughput, bytes/s
    b: float  # branches/s
    chal_size: int = CHAL_SIZE
    A: int = TOKEN_SIZE
    D: int = METADATA_SIZE

    def __post_init__(self):
        if min(self.M, self.B, self.b) <= 0 or min(self.chal_size, self.A, self.D) <= 0:
            raise ValueError("sizing parameters must be positive")

    @property
    def R(self) -> float:
        return 1 / self.M + 1 / self.B

    @property
    def N(self) -> int:
        return 2 * self.chal_size + 2 * self.A + self.D + 1

    @property
    def l(self) -> float:
        return TRANSFER_BYTES * self.b


def _round_up4(x: float) -> int:
    """Smallest multiple of 4 strictly above ``x`` (and at least 4)."""
    return max(4, (math.floor(x / 4) + 1) * 4)


def min_contention_free_log_size(p: SizingParams):
    rl = p.R * p.l
    if rl >= 1:
        return Unbounded
    return _round_up4(2 * p.R * p.N * p.l / (1 - rl))


def slice_has_slack(p: SizingParams, slice_size: int, rtt: float = 0.0) -> bool:
    """Engine timing model: does the free slice outlast one report's round trip?

    The TCB leaves only once both the MAC and the slice body are done, so
    the application runs solely while the trailer, the link round trip and
    the response are in flight. It must not log the free slice (two bytes
    short of full, plus the transfer in progress) in that window.
    """
    tail = (REPORT_TRAILER + RESP_SIZE) / p.B + rtt
    return p.l * tail + TRANSFER_BYTES < slice_size - 2


def stall_aware_log_size(p: SizingParams, rtt: float = 0.0, limit: int = 0x10000):
    """Smallest cf_size (multiple of 4) at which ``slice_has_slack`` holds,
    or ``Unbounded`` if none up to ``limit``."""
    for cf in range(8, limit + 1, 4):
        if slice_has_slack(p, cf // 2, rtt):
            return cf
    return Unbounded


def sizing_run(p: SizingParams, cf_size: int, rtt: float = 0.0, dispatch: float = 0.0,
               slices: int = 4, seed: int = 0) -> int:
    """T4 count of a CARAMEL run that logs about ``slices`` slices."""
    n = max(8, slices * (cf_size // 2) // TRANSFER_BYTES)
    wl = Workload("sizing", branch_rate=p.b, total_branches=n)
    baud = round(p.B * 10)
    res = run_simulation(Mode.caramel(cf_size), wl, LinkConfig(baud=baud, rtt=rtt),
                         TcbConfig(mac_rate=p.M, dispatch_overhead=dispatch), seed=seed)
    return res.metrics.count(Trigger.T4)


def contention_threshold(p: SizingParams, lo: int = 8, hi: int = 0x10000, rtt: float = 0.0,
                         dispatch: float = 0.0, seed: int = 0):
    """Smallest cf_size in [lo, hi] whose run shows no T4, by bisection on
    multiples of 4. ``Unbounded`` if even ``hi`` contends."""
    if sizing_run(p, hi, rtt, dispatch, seed=seed) > 0:
        return Unbounded
    lo, hi = lo // 4, hi // 4
    while lo < hi:
        mid = (lo + hi) // 2
        if sizing_run(p, mid * 4, rtt, dispatch, seed=seed) == 0:
            hi = mid
        else:
            lo = mid + 1
    return lo * 4


__all__ = ["SizingParams", "Unbounded", "min_contention_free_log_size", "stall_aware_log_size",
           "slice_has_slack", "contention_threshold", "sizing_run"]
