"""Incremental simulator: circuit modifiers, frontier tracking and execution.

Typical use::

    sim = Simulator(5, block_size=4)
    net1 = sim.insert_net()
    for q in sim.qubits():
        sim.insert_gate(GateKind.H, net1, q)
    net2 = sim.insert_net(net1)
    g6 = sim.insert_gate(GateKind.CNOT, net2, 3, 4)   # target q3, control q4
    sim.update_state()                                # full run
    sim.remove_gate(g6)
    sim.update_state()                                # incremental run
"""
from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .blocks import BlockStore, read_chain
from .core import (Circuit, Gate, GateKind, Mode, Net, SimulatorError,
                   UnknownGate, UnknownNet)
from .graph import PartitionGraph, dump_dot
from .plan import (Config, Partition, Stage, StageKind, mxv_rows, mxv_stages,
                   order_key, output_stage, permute_stage)

log = logging.getLogger(__name__)


class StaleState(SimulatorError):
    """Amplitudes were queried while circuit modifications are pending."""


class NumericError(SimulatorError):
    """A task produced a non-finite amplitude."""


@dataclass
class UpdateReport:
    full: bool
    elapsed_ms: float = 0.0
    executed: list[str] = field(default_factory=list)
    blocks_written: int = 0
    rewritten: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def executed_partitions(self) -> int:
        return len(self.executed)

    @property
    def rewritten_amplitudes(self) -> int:
        return len(self.rewritten)


def affected_set(frontiers: Iterable[Partition], graph: PartitionGraph) -> set[Partition]:
    """Frontiers plus every partition reachable from them."""
    return graph.reachable(frontiers)


class Simulator:
    """State-vector simulator over a partition graph with incremental updates.

    Gates are grouped into nets; every net's superposition gates share one
    fused matrix-vector stage behind a sync barrier, and every
    non-superposition gate gets its own swap/scale stage.
    """

    def __init__(self, n: int, block_size: int = 256, threads: int | None = None):
        self.circuit = Circuit(n)
        self.config = Config(block_size, threads)
        self.block_size, self.nblocks = self.config.geometry(n)
        self.graph = PartitionGraph([output_stage(n, self.config)])
        self._net_stages: dict[Net, list[Stage]] = {}
        self._gate_stage: dict[Gate, Stage] = {}
        self.frontiers: set[Partition] = set()
        self._ran = False
        self._pending = False
        self.last_report: UpdateReport | None = None

    @property
    def n(self) -> int:
        return self.circuit.n

    def qubits(self) -> tuple[int, ...]:
        """Qubit indices, most significant first."""
        return tuple(range(self.n - 1, -1, -1))

    def nets(self) -> list[Net]:
        return list(self.circuit.nets)

    def gates(self) -> list[Gate]:
        return list(self.circuit.iter_gates())

    def stages(self) -> list[Stage]:
        return list(self.graph.stages)

    def stage_of(self, gate: Gate) -> Stage:
        return self._gate_stage[gate]

    def net_stages(self, net: Net) -> list[Stage]:
        return list(self._net_stages.get(net, []))

    # modifiers -----------------------------------------------------------

    def insert_net(self, after: Net | None = None) -> Net:
        """Insert an empty net right after ``after`` (None: at the front)."""
        net = self.circuit.insert_net(after)
        self._net_stages[net] = []
        return net

    def append_net(self) -> Net:
        nets = self.circuit.nets
        return self.insert_net(nets[-1] if nets else None)

    def remove_net(self, net: Net) -> None:
        if not isinstance(net, Net):
            raise UnknownNet(f"{net!r} is not a net")
        self.circuit.position(net)
        for gate in list(net.gates):
            self.remove_gate(gate)
        self.circuit.remove_net(net)
        del self._net_stages[net]

    def insert_gate(self, kind: GateKind | str, net: Net, target: int,
                    control: int | None = None, *, theta: float = 0.0) -> Gate:
        """Add a gate to ``net``; argument order is (kind, net, target[, control])."""
        if isinstance(kind, str):
            kind = GateKind.parse(kind)
        if not isinstance(net, Net):
            raise UnknownNet(f"{net!r} is not a net")
        gate = self.circuit.add_gate(kind, net, target, control, theta)
        self._pending = True
        if gate.mode is Mode.SUPERPOSITION:
            self._rebuild_mxv(net)
        else:
            stage = permute_stage(gate, self.n, self.config)
            stages = self._net_stages[net]
            k = next((i for i, s in enumerate(stages)
                      if s.kind is StageKind.PERMUTE and order_key(s) > order_key(stage)),
                     len(stages))
            self._add_stage(net, k, stage)
            self._gate_stage[gate] = stage
        return gate

    def remove_gate(self, gate: Gate) -> None:
        if not isinstance(gate, Gate) or self.circuit.gates.get(gate.id) is not gate:
            raise UnknownGate(f"{gate!r} is not part of this circuit")
        self._pending = True
        self.circuit.drop_gate(gate)
        stage = self._gate_stage.pop(gate, None)
        if stage is not None:
            self._drop_stage(gate.net, stage)
        else:
            self._rebuild_mxv(gate.net)

    def _stage_index(self, net: Net, local: int) -> int:
        index = 0
        for other in self.circuit.nets:
            if other is net:
                return index + local
            index += len(self._net_stages[other])
        raise UnknownNet(net.name)

    def _add_stage(self, net: Net, local: int, stage: Stage) -> None:
        self.graph.connect_stage(stage, self._stage_index(net, local))
        self._net_stages[net].insert(local, stage)
        self.frontiers.update(stage.partitions)
        self._relink()

    def _drop_stage(self, net: Net, stage: Stage) -> None:
        delta = self.graph.disconnect_stage(stage)
        self._net_stages[net].remove(stage)
        self.frontiers.difference_update(stage.partitions)
        self.frontiers.update(delta.successors)
        if stage.store is not None:
            stage.store.release()
        self._relink()

    def _rebuild_mxv(self, net: Net) -> None:
        for stage in [s for s in self._net_stages[net] if s.kind is StageKind.MXV]:
            self._drop_stage(net, stage)
        for stage in [s for s in self._net_stages[net] if s.kind is StageKind.SYNC]:
            self._drop_stage(net, stage)
        superposed = [g for g in net.gates if g.mode is Mode.SUPERPOSITION]
        for k, stage in enumerate(mxv_stages(net, superposed, self.n, self.config)):
            self._add_stage(net, k, stage)

    def _data_stages(self) -> list[Stage]:
        return [s for s in self.graph.stages if s.store is not None]

    def _relink(self) -> None:
        prev = None
        for s in self._data_stages():
            s.store.prev = prev
            prev = s.store

    def _head(self) -> BlockStore | None:
        data = self._data_stages()
        return data[-1].store if data else None

    # state update --------------------------------------------------------

    def update_state(self) -> UpdateReport:
        """Run every affected partition (everything on the first call)."""
        full = not self._ran
        if full:
            todo = set(self.graph.nodes())
        else:
            todo = affected_set(self.frontiers, self.graph)
        report = UpdateReport(full)
        t0 = time.perf_counter()
        run = _Run(self, todo, self.config.workers)
        try:
            run.execute()
        except BaseException:
            for s in self._data_stages():
                s.store.abort()
            raise
        written = set()
        for s in self._data_stages():
            written.update(s.store.pending)
            report.blocks_written += s.store.commit()
        report.elapsed_ms = (time.perf_counter() - t0) * 1e3
        report.executed = [p.name for p in run.order if p.has_data]
        bs = self.block_size
        if written:
            report.rewritten = np.concatenate(
                [np.arange(b * bs, (b + 1) * bs) for b in sorted(written)])
        self.frontiers.clear()
        self._ran = True
        self._pending = False
        self.last_report = report
        log.debug("update (%s): %d partitions, %d blocks, %.3f ms",
                  "full" if full else "incremental", report.executed_partitions,
                  report.blocks_written, report.elapsed_ms)
        return report

    # queries -------------------------------------------------------------

    @property
    def stale(self) -> bool:
        return self._pending

    def amplitudes(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Amplitudes ``lo..hi`` (inclusive) of the last computed state."""
        if self._pending:
            raise StaleState("circuit modified since the last update_state()")
        size = 1 << self.n
        hi = size - 1 if hi is None else hi
        if not 0 <= lo <= hi < size:
            raise IndexError(f"amplitude range [{lo}, {hi}] outside [0, {size - 1}]")
        return read_chain(self._head(), lo, hi, self.block_size).copy()

    def state(self) -> np.ndarray:
        return self.amplitudes()

    def dump_graph(self, out: IO[str] | None = None) -> str:
        text = dump_dot(self.graph)
        if out is not None:
            out.write(text)
        return text


class _Run:
    """One execution of a set of partitions on a fixed-size worker pool.

    A partition starts when all its predecessors inside the set finished.
    Its intra-partition tasks write disjoint indices and run as separate
    jobs; the last one to finish stages the blocks and releases successors.
    """

    def __init__(self, sim: Simulator, todo: set[Partition], workers: int):
        self.sim = sim
        self.graph = sim.graph
        self.order = self.graph.topological_order(todo)
        self.members = set(self.order)
        self.workers = workers
        self._lock = threading.Lock()
        self._inputs: dict[Stage, np.ndarray] = {}

    def execute(self) -> None:
        if not self.order:
            return
        if self.workers <= 1:
            for p in self.order:
                job = _Job(self, p)
                for k in range(len(job.tasks)):
                    job.run_task(k)
                job.finish()
            return
        self._remaining = {p: sum(1 for q in self.graph.pred[p] if q in self.members)
                           for p in self.order}
        self._left = len(self.order)
        self._done = threading.Event()
        self._error: BaseException | None = None
        with ThreadPoolExecutor(self.workers, thread_name_prefix="incqsim") as pool:
            self._pool = pool
            for p in [p for p in self.order if self._remaining[p] == 0]:
                self._start(p)
            self._done.wait()
        if self._error is not None:
            raise self._error

    def _submit(self, fn, *args) -> None:
        def wrapped():
            try:
                fn(*args)
            except BaseException as exc:  # noqa: BLE001 - re-raised in execute()
                with self._lock:
                    if self._error is None:
                        self._error = exc
                self._done.set()
        self._pool.submit(wrapped)

    def _start(self, p: Partition) -> None:
        if self._error is None:
            self._submit(self._prepare, p)

    def _prepare(self, p: Partition) -> None:
        job = _Job(self, p)
        if len(job.tasks) <= 1:
            for k in range(len(job.tasks)):
                job.run_task(k)
            self._complete(job)
            return
        job.pending = len(job.tasks)
        for k in range(len(job.tasks)):
            self._submit(self._task, job, k)

    def _task(self, job: _Job, k: int) -> None:
        job.run_task(k)
        with self._lock:
            job.pending -= 1
            last = job.pending == 0
        if last:
            self._complete(job)

    def _complete(self, job: _Job) -> None:
        job.finish()
        ready = []
        with self._lock:
            self._left -= 1
            for s in self.graph.succ[job.partition]:
                if s in self.members:
                    self._remaining[s] -= 1
                    if self._remaining[s] == 0:
                        ready.append(s)
            finished = self._left == 0
        for s in ready:
            self._start(s)
        if finished:
            self._done.set()

    def full_input(self, stage: Stage) -> np.ndarray:
        with self._lock:
            vec = self._inputs.get(stage)
        if vec is None:
            prev = stage.store.prev
            size = self.sim.nblocks * self.sim.block_size
            vec = read_chain(prev, 0, size - 1, self.sim.block_size, staged=True)
            with self._lock:
                vec = self._inputs.setdefault(stage, vec)
        return vec


class _Job:
    def __init__(self, run: _Run, p: Partition):
        self.partition = p
        self.stage = stage = p.stage
        self.tasks = p.tasks if p.has_data else []
        self.pending = 0
        bs = run.sim.block_size
        self.base = p.blocks.first * bs
        if stage.kind is StageKind.PERMUTE:
            self.src = read_chain(stage.store.prev, self.base,
                                  (p.blocks.last + 1) * bs - 1, bs, staged=True)
            self.out = self.src.copy()
        elif stage.kind is StageKind.MXV:
            self.src = run.full_input(stage)
            self.out = np.empty(len(p.blocks) * bs, dtype=np.complex128)

    def run_task(self, k: int) -> None:
        # non-finite results are reported by finish()
        with np.errstate(all="ignore"):
            self._run_task(k)

    def _run_task(self, k: int) -> None:
        task = self.tasks[k]
        stage = self.stage
        if stage.kind is StageKind.MXV:
            rows = mxv_rows(stage.factors, self.src, task.first, task.count)
            self.out[task.first - self.base:task.last + 1 - self.base] = rows
            return
        ops = stage.ops
        sl = slice(task.first, task.last + 1)
        i = ops.i[sl] - self.base
        if ops.swap:
            j = ops.j[sl] - self.base
            self.out[i] = ops.scale_i[sl] * self.src[j]
            self.out[j] = ops.scale_j[sl] * self.src[i]
        else:
            self.out[i] = ops.scale_i[sl] * self.src[i]

    def finish(self) -> None:
        if not self.partition.has_data:
            return
        if not np.all(np.isfinite(self.out)):
            raise NumericError(f"non-finite amplitude in {self.partition.name}")
        self.stage.store.stage_write(self.partition.blocks.first, self.out)
