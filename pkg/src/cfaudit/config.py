"""Flat ``key = value`` experiment configs.

Blank lines and ``#`` comments are ignored. ``rule`` and ``device_rule``
may repeat; every other key may appear once. Examples::

    mode = caramel
    preset = ultra
    rtt_ms = 100
    rule = down 1 drop                 # lose the first response
    rule = up 2 tamper 40 0xff         # flip a byte of the second report
    device_rule = write 10 cflog       # untrusted write at branch 10
    device_rule = hijack 5 0xe006 0xe100
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .channel import DOWN, UP, AdversaryScript, Delay, Drop, Forge, Hijack, LinkConfig, Rule, TamperByte, UntrustedAccess
from .frames import CHAL_SIZE, TOKEN_SIZE
from .monitors import Region
from .sim.calibrate import CALIBRATION_MAC_RATE
from .sim.engine import KINDS, ConfigError, Mode
from .sim.workload import PRESETS, Cfg, Workload
from .tcb import HealAction, TcbConfig


class ParseError(ConfigError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


class UnknownKey(ParseError):
    pass


class UnknownValue(ParseError):
    pass


DEFAULT_MAC_RATE = TcbConfig().mac_rate


@dataclass
class ExperimentConfig:
    mode: str = "caramel"
    slices: int = 2
    cf_size: int = 2048
    preset: str | None = None
    branch_rate: float | None = None
    total_branches: int | None = None
    jitter: float = 0.0
    graph_seed: int = 0
    baud: int = 115200
    bits_per_byte: int = 10
    rtt_ms: float = 100.0
    mac_rate: float | None = None
    dispatch_us: float = 200.0
    heal_action: str = "reset"
    chal: int = CHAL_SIZE
    token: int = TOKEN_SIZE
    seed: int = 0
    horizon_s: float = 60.0
    output: str = "cfaudit-run"
    rules: list = field(default_factory=list)
    device_rules: list = field(default_factory=list)

    # -- derived objects ---------------------------------------------------

    def to_mode(self) -> Mode:
        return Mode(self.mode, self.cf_size, self.slices if self.mode == "caramel" else 1)

    def to_workload(self) -> Workload:
        if self.preset is not None:
            wl = PRESETS[self.preset]
        else:
            wl = Workload("inline", branch_rate=50.0, total_branches=512)
        kw = {"jitter": self.jitter, "cfg": Cfg(graph_seed=self.graph_seed)}
        if self.branch_rate is not None:
            kw["branch_rate"] = self.branch_rate
        if self.total_branches is not None:
            kw["total_branches"] = self.total_branches
        return wl.with_params(**kw)

    def to_link(self) -> LinkConfig:
        return LinkConfig(self.baud, self.bits_per_byte, self.rtt_ms / 1000)

    @property
    def effective_mac_rate(self) -> float:
        # presets were fitted at the calibration MAC rate, so they default to it
        if self.mac_rate is not None:
            return self.mac_rate
        return CALIBRATION_MAC_RATE if self.preset is not None else DEFAULT_MAC_RATE

    def to_tcb(self) -> TcbConfig:
        return TcbConfig(heal_action=HealAction(self.heal_action), mac_rate=self.effective_mac_rate,
                         dispatch_overhead=self.dispatch_us * 1e-6,
                         update_image=bytes(512) if self.heal_action == "update" else None)

    def to_adversary(self) -> AdversaryScript:
        return AdversaryScript(list(self.rules), list(self.device_rules))

    def preset_name(self) -> str:
        return self.preset or "inline"

    def with_value(self, key: str, text: str) -> "ExperimentConfig":
        """Copy with one key re-parsed from text (used by sweeps)."""
        cfg = replace(self, rules=list(self.rules), device_rules=list(self.device_rules))
        _assign(cfg, key, text, None)
        return cfg


# -- value parsing ---------------------------------------------------------

def _int(text: str) -> int:
    return int(text, 0)


def _positive(conv):
    def f(text):
        v = conv(text)
        if v <= 0:
            raise ValueError("must be positive")
        return v
    return f


def _nonneg(conv):
    def f(text):
        v = conv(text)
        if v < 0:
            raise ValueError("must be non-negative")
        return v
    return f


def _choice(options):
    def f(text):
        if text not in options:
            raise KeyError(f"expected one of {', '.join(options)}")
        return text
    return f


def _fixed(expected):
    def f(text):
        v = _int(text)
        if v != expected:
            raise KeyError(f"only {expected} is supported by the wire format")
        return v
    return f


def _cf_size(text):
    v = _positive(_int)(text)
    if v % 4 or v > 0x10000:
        raise ValueError("must be a multiple of 4 no larger than 65536")
    return v


_CONVERTERS = {
    "mode": _choice(KINDS),
    "slices": lambda t: _choice(("1", "2"))(t) and int(t),
    "cf_size": _cf_size,
    "preset": lambda t: None if t == "none" else _choice(tuple(PRESETS))(t),
    "branch_rate": _positive(float),
    "total_branches": _positive(_int),
    "jitter": _nonneg(float),
    "graph_seed": _nonneg(_int),
    "baud": _positive(_int),
    "bits_per_byte": _positive(_int),
    "rtt_ms": _nonneg(float),
    "mac_rate": _positive(float),
    "dispatch_us": _nonneg(float),
    "heal_action": _choice(tuple(h.value for h in HealAction)),
    "chal": _fixed(CHAL_SIZE),
    "token": _fixed(TOKEN_SIZE),
    "seed": _nonneg(_int),
    "horizon_s": _positive(float),
    "output": str,
}
REPEATED = {"rule": "rules", "device_rule": "device_rules"}
KEYS = tuple(f.name for f in fields(ExperimentConfig) if f.name not in REPEATED.values())


def parse_rule(text: str) -> Rule:
    """``<up|down> <ordinal> <drop | delay s | tamper off val | forge hex>``"""
    parts = text.split()
    if len(parts) < 3:
        raise ValueError("expected: direction ordinal action [args]")
    direction, ordinal, action, args = parts[0], _int(parts[1]), parts[2], parts[3:]
    if direction not in (UP, DOWN):
        raise KeyError(f"direction must be {UP} or {DOWN}")
    nargs = {"drop": 0, "delay": 1, "tamper": 2, "forge": 1}
    if action not in nargs:
        raise KeyError(f"unknown action {action!r}")
    if len(args) != nargs[action]:
        raise ValueError(f"{action} takes {nargs[action]} argument(s)")
    if action == "drop":
        act = Drop()
    elif action == "delay":
        act = Delay(_nonneg(float)(args[0]))
    elif action == "tamper":
        act = TamperByte(_nonneg(_int)(args[0]), _int(args[1]) & 0xFF)
    else:
        act = Forge(bytes.fromhex(args[0]))
    return Rule(direction, ordinal, act)


def parse_device_rule(text: str):
    """``<read|write> <branch> <region>`` or ``hijack <branch> <src> <dst>``"""
    parts = text.split()
    if len(parts) == 4 and parts[0] == "hijack":
        return Hijack(_nonneg(_int)(parts[1]), _int(parts[2]), _int(parts[3]))
    if len(parts) == 3 and parts[0] in ("read", "write"):
        try:
            region = Region(parts[2])
        except ValueError:
            raise KeyError(f"unknown region {parts[2]!r}") from None
        return UntrustedAccess(_nonneg(_int)(parts[1]), region, parts[0])
    raise ValueError("expected '<read|write> branch region' or 'hijack branch src dst'")


def _assign(cfg: ExperimentConfig, key: str, value: str, lineno: int | None) -> None:
    try:
        if key in REPEATED:
            conv = parse_rule if key == "rule" else parse_device_rule
            getattr(cfg, REPEATED[key]).append(conv(value))
        elif key in _CONVERTERS:
            setattr(cfg, key, _CONVERTERS[key](value))
        else:
            raise UnknownKey(f"unknown key {key!r}", lineno)
    except KeyError as exc:
        raise UnknownValue(f"{key} = {value}: {exc.args[0]}", lineno) from None
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{key} = {value}: {exc}", lineno) from None


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ParseError("empty key or value", lineno)
        if key in seen and key not in REPEATED:
            raise ParseError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        _assign(cfg, key, value, lineno)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
