"""Split stage work into tasks and partitions over fixed-size amplitude blocks.

A non-superposition gate is enumerated as element operations; runs of
``block_size`` consecutive operations form tasks, and tasks whose block
ranges overlap are merged into one partition. A net's superposition gates
are fused into a single matrix-vector stage with one partition per block,
whose matrix rows are generated on the fly.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blocks import BlockStore
from .core import ElementOps, Gate, Mode, Net, element_ops

_IDENTITY = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True)
class Config:
    block_size: int = 256
    threads: int | None = None

    def __post_init__(self):
        b = self.block_size
        if not isinstance(b, (int, np.integer)) or b < 2 or b & (b - 1):
            raise ValueError(f"block size must be a power of two >= 2, got {b!r}")
        if self.threads is not None and self.threads < 1:
            raise ValueError("thread count must be positive")

    @property
    def workers(self) -> int:
        return self.threads or os.cpu_count() or 1

    def geometry(self, n: int) -> tuple[int, int]:
        """(block size, block count) for ``n`` qubits; small states form one block."""
        size = 1 << n
        bs = min(self.block_size, size)
        return bs, size // bs


@dataclass(frozen=True)
class BlockRange:
    first: int
    last: int

    def __post_init__(self):
        if self.first > self.last:
            raise ValueError(f"empty block range [{self.first}, {self.last}]")

    def intersects(self, other: BlockRange) -> bool:
        return max(self.first, other.first) <= min(self.last, other.last)

    def __len__(self) -> int:
        return self.last - self.first + 1

    def __iter__(self):
        return iter(range(self.first, self.last + 1))

    def __str__(self) -> str:
        return f"[{self.first}..{self.last}]"


@dataclass(eq=False)
class Task:
    """Iteration range ``first..last`` (ops or matrix rows) and the state-index
    hull ``lo..hi`` it touches."""

    first: int
    last: int
    lo: int
    hi: int

    @property
    def count(self) -> int:
        return self.last - self.first + 1

    def __repr__(self) -> str:
        return f"Task(ops {self.first}..{self.last}, region [{self.lo}, {self.hi}])"


class StageKind(enum.Enum):
    PERMUTE = "permute-scale"
    MXV = "matrix-vector"
    SYNC = "sync"
    OUTPUT = "output"


@dataclass(eq=False)
class Partition:
    tasks: list[Task]
    blocks: BlockRange
    stage: Stage | None = None
    index: int = 0

    @property
    def name(self) -> str:
        if self.stage is None:
            return f"p{self.index}"
        if self.stage.kind in (StageKind.SYNC, StageKind.OUTPUT):
            return self.stage.name
        return f"{self.stage.name}_p{self.index}"

    @property
    def has_data(self) -> bool:
        return self.stage is not None and self.stage.kind in (StageKind.PERMUTE, StageKind.MXV)

    def __repr__(self) -> str:
        return f"<{self.name} {self.blocks}>"


@dataclass(eq=False)
class Stage:
    kind: StageKind
    name: str
    net: Net | None = None
    gates: tuple[Gate, ...] = ()
    partitions: list[Partition] = field(default_factory=list)
    store: BlockStore | None = None
    ops: ElementOps | None = None
    # per-qubit 2x2 factor of a fused matrix-vector stage (None = identity)
    factors: tuple[np.ndarray | None, ...] = ()
    seq: int = 0

    def __post_init__(self):
        for k, p in enumerate(self.partitions):
            p.stage, p.index = self, k

    @property
    def gate(self) -> Gate | None:
        return self.gates[0] if self.kind is StageKind.PERMUTE else None

    @property
    def block_count(self) -> int:
        return sum(len(p.blocks) for p in self.partitions)

    def __repr__(self) -> str:
        return f"<Stage {self.name} {self.kind.value} parts={len(self.partitions)}>"


def chunk_tasks(ops: ElementOps, block_size: int) -> list[Task]:
    """Cut ``ops`` into tasks of ``block_size`` consecutive operations."""
    count = len(ops)
    if count == 0:
        return []
    starts = np.arange(0, count, block_size)
    lo = np.minimum.reduceat(np.minimum(ops.i, ops.j), starts)
    hi = np.maximum.reduceat(np.maximum(ops.i, ops.j), starts)
    return [
        Task(int(s), int(min(s + block_size, count) - 1), int(a), int(b))
        for s, a, b in zip(starts, lo, hi)
    ]


def form_partitions(tasks: Sequence[Task], block_size: int) -> list[Partition]:
    """Greedily merge consecutive tasks into partitions.

    A task joins the running partition when its region reaches into the
    partition's last block; otherwise it opens a new partition.
    """
    parts: list[Partition] = []
    group: list[Task] = []
    lo = hi = 0
    for task in tasks:
        if group and task.lo // block_size <= hi // block_size:
            group.append(task)
            lo, hi = min(lo, task.lo), max(hi, task.hi)
            continue
        if group:
            parts.append(Partition(group, BlockRange(lo // block_size, hi // block_size)))
        group, lo, hi = [task], task.lo, task.hi
    if group:
        parts.append(Partition(group, BlockRange(lo // block_size, hi // block_size)))
    return parts


def mxv_partitions(n: int, block_size: int) -> list[Partition]:
    bs = min(block_size, 1 << n)
    return [
        Partition([Task(k * bs, (k + 1) * bs - 1, k * bs, (k + 1) * bs - 1)], BlockRange(k, k))
        for k in range((1 << n) // bs)
    ]


def _is_identity(f) -> bool:
    return f is None or (f.shape == (2, 2) and np.array_equal(f, _IDENTITY))


def kron_row(factors: Sequence[np.ndarray | None], row: int) -> list[tuple[int, complex]]:
    """Nonzero entries of one row of ``factors[n-1] (x) ... (x) factors[0]``.

    The row is expanded recursively from the highest qubit down. Identity
    factors pass the row bit straight through and zero entries are pruned.
    """
    n = len(factors)
    out: list[tuple[int, complex]] = []

    def expand(q: int, col: int, value: complex) -> None:
        if q < 0:
            out.append((col, value))
            return
        rbit = (row >> q) & 1
        f = factors[q]
        if _is_identity(f):
            expand(q - 1, col | (rbit << q), value)
            return
        for cbit in (0, 1):
            v = f[rbit, cbit]
            if v != 0:
                expand(q - 1, col | (cbit << q), value * v)

    expand(n - 1, 0, complex(1.0))
    return out


def mxv_rows(factors: Sequence[np.ndarray | None], vec: np.ndarray, row_lo: int,
             nrows: int) -> np.ndarray:
    """Rows ``row_lo .. row_lo + nrows - 1`` of the fused operator applied to ``vec``.

    ``row_lo`` must be a multiple of ``nrows`` (a power of two). Qubits above
    the block are fixed by the row index and contracted away, identity factors
    by slicing; the remaining factors act on the block-sized tensor.
    """
    n = len(factors)
    low = nrows.bit_length() - 1
    t = vec.reshape((2,) * n) if n else vec
    for q in range(n - 1, low - 1, -1):
        rbit = (row_lo >> q) & 1
        f = factors[q]
        if _is_identity(f):
            t = t[rbit]
        else:
            t = f[rbit, 0] * t[0] + f[rbit, 1] * t[1]
    for q in range(low - 1, -1, -1):
        f = factors[q]
        if _is_identity(f):
            continue
        axis = low - 1 - q
        t = np.moveaxis(np.tensordot(f, t, axes=([1], [axis])), 0, axis)
    return np.ascontiguousarray(t).reshape(nrows)


def permute_stage(gate: Gate, n: int, cfg: Config) -> Stage:
    bs, nblocks = cfg.geometry(n)
    ops = element_ops(gate, n)
    parts = form_partitions(chunk_tasks(ops, cfg.block_size), bs)
    return Stage(StageKind.PERMUTE, gate.name, gate.net, (gate,), parts,
                 BlockStore(nblocks, bs, gate.name), ops=ops, seq=gate.id)


def mxv_stages(net: Net, gates: Sequence[Gate], n: int, cfg: Config) -> list[Stage]:
    """The sync barrier plus fused matrix-vector stage for ``gates``."""
    if not gates:
        return []
    bs, nblocks = cfg.geometry(n)
    factors: list[np.ndarray | None] = [None] * n
    for g in gates:
        factors[g.target] = g.matrix()
    name = f"MxV{net.id}"
    sync = Stage(StageKind.SYNC, f"sync_{net.id}", net,
                 partitions=[Partition([], BlockRange(0, nblocks - 1))])
    mxv = Stage(StageKind.MXV, name, net, tuple(gates), mxv_partitions(n, cfg.block_size),
                BlockStore(nblocks, bs, name), factors=tuple(factors))
    return [sync, mxv]


def output_stage(n: int, cfg: Config) -> Stage:
    _, nblocks = cfg.geometry(n)
    return Stage(StageKind.OUTPUT, "output",
                 partitions=[Partition([], BlockRange(0, nblocks - 1))])


def order_key(stage: Stage) -> tuple[int, int]:
    """Permute stages of a net run by ascending block count, then insertion order."""
    return stage.block_count, stage.seq


def build_stages(net: Net, n: int, cfg: Config) -> list[Stage]:
    superposed = [g for g in net.gates if g.mode is Mode.SUPERPOSITION]
    stages = mxv_stages(net, superposed, n, cfg)
    permutes = [permute_stage(g, n, cfg) for g in net.gates if g.mode is Mode.NON_SUPERPOSITION]
    return stages + sorted(permutes, key=order_key)
