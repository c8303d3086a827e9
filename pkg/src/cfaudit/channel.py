"""Simulated CM-UART link with serialization timing and a scripted adversary.

Times inside the simulator are integer nanoseconds. ``UP`` is prover to
verifier, ``DOWN`` is verifier to prover. Messages are numbered per
direction starting at 1, counting only genuine sends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .monitors import Actor, Region

UP = "up"
DOWN = "down"
NS = 1_000_000_000


@dataclass(frozen=True)
class LinkConfig:
    baud: int = 115200
    bits_per_byte: int = 10
    rtt: float = 0.100

    def __post_init__(self):
        if self.baud <= 0 or self.bits_per_byte <= 0:
            raise ValueError("baud and bits_per_byte must be positive")
        if self.rtt < 0:
            raise ValueError("rtt must be non-negative")

    @property
    def bytes_per_second(self) -> float:
        return self.baud / self.bits_per_byte

    def serialize_ns(self, nbytes: int) -> int:
        """Time for ``nbytes`` back-to-back bytes on the wire."""
        return nbytes * self.bits_per_byte * NS // self.baud

    @property
    def half_rtt_ns(self) -> int:
        return round(self.rtt * NS / 2)


def byte_time(cfg: LinkConfig) -> float:
    return cfg.bits_per_byte / cfg.baud


# -- adversary -------------------------------------------------------------

@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class Delay:
    seconds: float


@dataclass(frozen=True)
class TamperByte:
    offset: int
    value: int


@dataclass(frozen=True)
class Forge:
    """Inject ``frame`` on the wire just ahead of the matched message."""
    frame: bytes


@dataclass(frozen=True)
class Rule:
    direction: str
    ordinal: int
    action: object

    def __post_init__(self):
        if self.direction not in (UP, DOWN):
            raise ValueError(f"direction must be {UP!r} or {DOWN!r}")
        if self.ordinal < 1:
            raise ValueError("message ordinals start at 1")


@dataclass(frozen=True)
class UntrustedAccess:
    """Compromised application software touches a region at branch ``at_branch``."""
    at_branch: int
    target: Region
    kind: str = "write"
    actor: Actor = Actor.UNTRUSTED


@dataclass(frozen=True)
class Hijack:
    """Control flow diverted: branch ``at_branch`` takes edge ``src -> dst``."""
    at_branch: int
    src: int
    dst: int


@dataclass
class AdversaryScript:
    rules: list = field(default_factory=list)
    device: list = field(default_factory=list)

    def matching(self, direction: str, ordinal: int) -> list:
        return [r.action for r in self.rules if r.direction == direction and r.ordinal == ordinal]


@dataclass(frozen=True)
class Delivery:
    """One message as the receiver sees it; ``times`` are per-byte arrivals."""
    payload: bytes
    times: tuple
    forged: bool = False

    @property
    def arrival(self) -> int:
        return self.times[-1] if self.times else 0


def apply_rules(actions: list, payload: bytes) -> tuple[list, bytes | None, int]:
    """Returns ``(forged_frames, genuine_or_None, extra_delay_ns)``."""
    forged, data, delay = [], bytearray(payload), 0
    dropped = False
    for a in actions:
        if isinstance(a, Drop):
            dropped = True
        elif isinstance(a, Delay):
            delay += round(a.seconds * NS)
        elif isinstance(a, TamperByte):
            if 0 <= a.offset < len(data):
                data[a.offset] = a.value & 0xFF
        elif isinstance(a, Forge):
            forged.append(bytes(a.frame))
        else:
            raise TypeError(f"unknown adversary action {a!r}")
    return forged, None if dropped else bytes(data), delay


class Link:
    """Both directions of the prover/verifier link."""

    def __init__(self, cfg: LinkConfig, adv: AdversaryScript | None = None):
        self.cfg = cfg
        self.adv = adv or AdversaryScript()
        self.sent = {UP: 0, DOWN: 0}
        self.line_free = {UP: 0, DOWN: 0}

    def _schedule(self, frames: list, start: int, extra: list) -> tuple[list, int]:
        out, t = [], start
        half = self.cfg.half_rtt_ns
        for (payload, forged), delay in zip(frames, extra):
            times = tuple(t + self.cfg.serialize_ns(k + 1) + half + delay for k in range(len(payload)))
            out.append(Delivery(payload, times, forged))
            t += self.cfg.serialize_ns(len(payload))
        return out, t

    def send(self, direction: str, frame: bytes, t0: int) -> list[Delivery]:
        """Serialize ``frame`` starting no earlier than ``t0`` (line permitting)."""
        self.sent[direction] += 1
        forged, genuine, delay = apply_rules(self.adv.matching(direction, self.sent[direction]), frame)
        frames = [(f, True) for f in forged]
        extra = [0] * len(forged)
        if genuine is not None:
            frames.append((genuine, False))
            extra.append(delay)
        out, end = self._schedule(frames, max(t0, self.line_free[direction]), extra)
        self.line_free[direction] = end
        return out

    def carry(self, direction: str, frame: bytes, ends: list[int]) -> list[Delivery]:
        """A message clocked out by the sender itself; ``ends[k]`` is when
        byte ``k`` finished on the wire. The adversary still sees it whole."""
        self.sent[direction] += 1
        forged, genuine, delay = apply_rules(self.adv.matching(direction, self.sent[direction]), frame)
        half = self.cfg.half_rtt_ns
        first = ends[0] if ends else 0
        out = [Delivery(f, tuple(first + half for _ in f), True) for f in forged]
        if genuine is not None:
            out.append(Delivery(genuine, tuple(e + half + delay for e in ends), False))
        return out


def link_send(frame: bytes, t0: int, cfg: LinkConfig, adv: AdversaryScript | None = None,
              direction: str = DOWN, ordinal: int = 1) -> list[Delivery]:
    """Delivery schedule of a single message numbered ``ordinal``."""
    link = Link(cfg, adv)
    link.sent[direction] = ordinal - 1
    return link.send(direction, frame, t0)
