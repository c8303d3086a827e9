"""Synthetic audited applications.

The audited region is a ring of basic blocks; each block ends in a branch
that either falls through to the next block or jumps to one fixed, randomly
chosen target. Executions are seeded random walks over that graph.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from ..log import Transfer
from ..verifier import PathPolicy

AER_BASE = 0xE000
BLOCKS = 64
BLOCK_BYTES = 8


@dataclass(frozen=True)
class Cfg:
    """Control-flow graph of the audited region."""

    base: int = AER_BASE
    blocks: int = BLOCKS
    graph_seed: int = 0

    @property
    def aer_min(self) -> int:
        return self.base

    @property
    def aer_max(self) -> int:
        return self.base + self.blocks * BLOCK_BYTES - 2

    def block_start(self, j: int) -> int:
        return self.base + BLOCK_BYTES * (j % self.blocks)

    def block_end(self, j: int) -> int:
        return self.block_start(j) + BLOCK_BYTES - 2

    def targets(self) -> list[tuple[int, int]]:
        """Per block, the (fall-through, jump) successor indices."""
        rng = random.Random(self.graph_seed)
        out = []
        for j in range(self.blocks):
            other = rng.randrange(self.blocks - 1)
            if other >= j:
                other += 1
            out.append(((j + 1) % self.blocks, other))
        return out

    def policy(self) -> PathPolicy:
        edges = set()
        for j, succ in enumerate(self.targets()):
            for k in succ:
                edges.add((self.block_end(j), self.block_start(k)))
        return PathPolicy(frozenset(edges), self.aer_min, self.aer_max)


@dataclass(frozen=True)
class Workload:
    name: str
    branch_rate: float
    total_branches: int
    cfg: Cfg = field(default_factory=Cfg)
    jitter: float = 0.0
    aer_size: int = 512

    def __post_init__(self):
        if self.branch_rate <= 0:
            raise ValueError("branch_rate must be positive")
        if self.total_branches < 1:
            raise ValueError("total_branches must be at least 1")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter must lie in [0, 1)")

    @property
    def baseline_runtime(self) -> float:
        return self.total_branches / self.branch_rate

    @property
    def cfg_edges(self) -> PathPolicy:
        return self.cfg.policy()

    def with_params(self, **kw) -> "Workload":
        return replace(self, **kw)

    def transfers(self, seed: int) -> list[Transfer]:
        succ = self.cfg.targets()
        rng = random.Random(f"walk:{seed}")
        j, out = 0, []
        for _ in range(self.total_branches):
            k = succ[j][rng.getrandbits(1)]
            out.append(Transfer(self.cfg.block_end(j), self.cfg.block_start(k)))
            j = k
        return out

    def branch_times_ns(self, seed: int) -> list[int]:
        """App-time instant of each branch; the last one never passes the end."""
        period = 1e9 / self.branch_rate
        if not self.jitter:
            return [round((i + 1) * period) for i in range(self.total_branches)]
        rng = random.Random(f"gaps:{seed}")
        return [round((i + 1 - self.jitter * rng.random()) * period)
                for i in range(self.total_branches)]

    def aer_bytes(self, seed: int) -> bytes:
        return random.Random(f"aer:{self.cfg.graph_seed}").randbytes(self.aer_size)


# Output of calibrate.calibrate_all() under CALIBRATION_FIXED (mac_rate 14000 B/s,
# 1.5 fills of a 2 KB log); tests check that recalibrating reproduces them.
PRESETS: dict[str, Workload] = {
    "ultra": Workload("ultra", branch_rate=1214.1597317849664, total_branches=768),
    "temp": Workload("temp", branch_rate=1646.1441049522625, total_branches=768),
    "syringe": Workload("syringe", branch_rate=1510.5316085926454, total_branches=768),
    "rover": Workload("rover", branch_rate=986.3977960882875, total_branches=768),
}


def preset(name: str) -> Workload:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
