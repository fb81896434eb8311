"""Command-line front end: ``simulate``, ``replay`` and ``bench``.

Exit codes: 0 ok, 1 parse/trace error, 2 unsupported gate, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import random
import re
import sys
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qasm
from .core import GateKind, SimulatorError
from .engine import NumericError, Simulator
from .oracle import simulate_dense

EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_NUMERIC = 1, 2, 3


class TraceError(SimulatorError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _block_size(text: str) -> int:
    b = int(text)
    if b < 2 or b & (b - 1):
        raise argparse.ArgumentTypeError(f"block size must be a power of two >= 2, got {b}")
    return b


def parse_angle(text: str) -> float:
    """Decimal radians, ``pi``, ``-pi`` or ``pi/INT`` (any real expression accepted)."""
    try:
        return qasm.eval_angle(text)
    except ValueError:
        raise TraceError(f"bad angle {text!r}") from None


# simulate ------------------------------------------------------------------

def format_amplitudes(state: np.ndarray, emit: str, top: int | None) -> str:
    if top is None:
        idx = np.arange(len(state))
    else:
        order = np.lexsort((np.arange(len(state)), -np.abs(state)))
        idx = np.sort(order[:top])
    # + 0.0 turns -0.0 into 0.0
    re = state.real + 0.0
    im = state.imag + 0.0
    if emit == "json":
        return json.dumps([{"index": int(i), "re": float(re[i]), "im": float(im[i])}
                           for i in idx]) + "\n"
    lines = [f"{int(i)} {float(re[i])!r} {float(im[i])!r}" for i in idx]
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    program = qasm.parse_file(args.qasm)
    sim = qasm.load(program, args.block_size, args.threads)
    if args.dump_graph:
        with open(args.dump_graph, "w", encoding="utf-8", newline="\n") as fh:
            sim.dump_graph(fh)
    report = sim.update_state()
    top = None if args.all else args.top
    sys.stdout.write(format_amplitudes(sim.state(), args.emit, top))
    print(f"# {program.n} qubits, {len(sim.gates())} gates, {len(sim.nets())} nets, "
          f"{report.executed_partitions} partitions, {report.elapsed_ms:.3f} ms",
          file=sys.stderr)
    return 0


# replay --------------------------------------------------------------------

@dataclass
class TraceOp:
    verb: str
    args: tuple
    line: int


_KIND = re.compile(r"^([A-Za-z]+)(?:\((.+)\))?$")


def _qubit(tok: str, line: int) -> int:
    try:
        return int(tok[1:] if tok[:1] in "qQ" else tok)
    except ValueError:
        raise TraceError(f"bad qubit {tok!r}", line) from None


def parse_trace(text: str) -> tuple[int, list[TraceOp]]:
    """Parse a modifier trace; returns (qubit count, operations)."""
    n = None
    ops: list[TraceOp] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        verb = tok[0]
        if verb == "qubits" and len(tok) == 2:
            n = int(tok[1])
        elif verb == "net" and len(tok) in (2, 4):
            if len(tok) == 4 and tok[2] != "after":
                raise TraceError(f"expected 'after', got {tok[2]!r}", lineno)
            ops.append(TraceOp("net", (tok[1], tok[3] if len(tok) == 4 else None), lineno))
        elif verb == "gate" and len(tok) in (5, 6):
            m = _KIND.match(tok[2])
            if not m:
                raise TraceError(f"bad gate kind {tok[2]!r}", lineno)
            try:
                kind = GateKind.parse(m.group(1))
            except ValueError as exc:
                raise TraceError(str(exc), lineno) from None
            theta = parse_angle(m.group(2)) if m.group(2) else 0.0
            control = _qubit(tok[5], lineno) if len(tok) == 6 else None
            ops.append(TraceOp("gate", (tok[1], kind, theta, tok[3],
                                        _qubit(tok[4], lineno), control), lineno))
        elif verb in ("remove_gate", "remove_net", "dump") and len(tok) == 2:
            ops.append(TraceOp(verb, (tok[1],), lineno))
        elif verb == "update" and len(tok) == 1:
            ops.append(TraceOp("update", (), lineno))
        else:
            raise TraceError(f"cannot parse {line!r}", lineno)
    if n is None:
        raise TraceError("missing 'qubits <n>' line")
    return n, ops


@dataclass
class ReplayRow:
    update: int
    wall_time_ms: float
    executed_partitions: int
    blocks_written: int
    rewritten_amplitudes: int
    max_deviation: float | None = None


def replay(n: int, ops: Sequence[TraceOp], block_size: int = 256,
           threads: int | None = None, verify: bool = False) -> tuple[Simulator, list[ReplayRow]]:
    sim = Simulator(n, block_size, threads)
    nets: dict[str, object] = {}
    gates: dict[str, object] = {}
    rows: list[ReplayRow] = []

    def lookup(table, key, what, line):
        if key not in table:
            raise TraceError(f"unknown {what} {key!r}", line)
        return table[key]

    for op in ops:
        try:
            if op.verb == "net":
                name, after = op.args
                if name in nets:
                    raise TraceError(f"net {name!r} already defined", op.line)
                if after is None:
                    nets[name] = sim.append_net()
                elif after == "begin":
                    nets[name] = sim.insert_net(None)
                else:
                    nets[name] = sim.insert_net(lookup(nets, after, "net", op.line))
            elif op.verb == "gate":
                name, kind, theta, net, target, control = op.args
                if name in gates:
                    raise TraceError(f"gate {name!r} already defined", op.line)
                gates[name] = sim.insert_gate(kind, lookup(nets, net, "net", op.line),
                                              target, control, theta=theta)
            elif op.verb == "remove_gate":
                sim.remove_gate(lookup(gates, op.args[0], "gate", op.line))
                del gates[op.args[0]]
            elif op.verb == "remove_net":
                net = lookup(nets, op.args[0], "net", op.line)
                sim.remove_net(net)
                del nets[op.args[0]]
                for k in [k for k, g in gates.items() if g.net is net]:
                    del gates[k]
            elif op.verb == "dump":
                with open(op.args[0], "w", encoding="utf-8", newline="\n") as fh:
                    sim.dump_graph(fh)
            elif op.verb == "update":
                report = sim.update_state()
                row = ReplayRow(len(rows) + 1, report.elapsed_ms, report.executed_partitions,
                                report.blocks_written, report.rewritten_amplitudes)
                if verify:
                    row.max_deviation = float(np.max(np.abs(
                        sim.state() - simulate_dense(sim.circuit))))
                rows.append(row)
        except TraceError:
            raise
        except NumericError:
            raise
        except SimulatorError as exc:
            raise TraceError(str(exc), op.line) from None
    return sim, rows


def cmd_replay(args) -> int:
    with open(args.trace, encoding="utf-8") as fh:
        n, ops = parse_trace(fh.read())
    _, rows = replay(n, ops, args.block_size, args.threads, args.verify)
    w = csv.writer(sys.stdout, lineterminator="\n")
    header = ["update", "wall_time_ms", "executed_partitions", "blocks_written",
              "rewritten_amplitudes"]
    w.writerow(header + (["max_deviation"] if args.verify else []))
    for r in rows:
        rec = [r.update, f"{r.wall_time_ms:.3f}", r.executed_partitions, r.blocks_written,
               r.rewritten_amplitudes]
        if args.verify:
            rec.append(f"{r.max_deviation:.3e}")
        w.writerow(rec)
    return 0


# bench ---------------------------------------------------------------------

class _LevelCircuit:
    """A simulator whose nets are a subset of a program's levels, kept in level order."""

    def __init__(self, program: qasm.QasmProgram, block_size: int, threads: int | None):
        self.levels = qasm.levelize(program)
        self.sim = Simulator(program.n, block_size, threads)
        self.nets: dict[int, object] = {}

    def insert(self, level: int) -> None:
        before = [k for k in self.nets if k < level]
        after = self.nets[max(before)] if before else None
        net = self.sim.insert_net(after)
        for s in self.levels[level]:
            kind, target, control, theta = qasm.gate_args(s)
            self.sim.insert_gate(kind, net, target, control, theta=theta)
        self.nets[level] = net

    def remove(self, level: int) -> None:
        self.sim.remove_net(self.nets.pop(level))

    def present(self) -> list[int]:
        return sorted(self.nets)

    def absent(self) -> list[int]:
        return [k for k in range(len(self.levels)) if k not in self.nets]


def run_bench(program: qasm.QasmProgram, mode: str, *, seed: int = 0,
              levels_per_iter: int = 1, iterations: int = 50, block_size: int = 256,
              threads: int | None = None) -> list[tuple[int, float, int]]:
    """Rows of (iteration, wall-time ms, executed partitions)."""
    rng = random.Random(seed)
    lc = _LevelCircuit(program, block_size, threads)
    rows = []

    def step(it: int) -> None:
        t0 = time.perf_counter()
        report = lc.sim.update_state()
        rows.append((it, (time.perf_counter() - t0) * 1e3, report.executed_partitions))

    if mode == "insert-sweep":
        it = 0
        while lc.absent():
            it += 1
            pick = rng.sample(lc.absent(), min(levels_per_iter, len(lc.absent())))
            for k in sorted(pick):
                lc.insert(k)
            step(it)
        return rows

    for k in range(len(lc.levels)):
        lc.insert(k)
    step(0)
    if mode == "remove-sweep":
        it = 0
        while lc.present():
            it += 1
            for k in rng.sample(lc.present(), min(levels_per_iter, len(lc.present()))):
                lc.remove(k)
            step(it)
    elif mode == "mix":
        for it in range(1, iterations + 1):
            for _ in range(levels_per_iter):
                present, absent = lc.present(), lc.absent()
                if absent and (not present or rng.random() < 0.5):
                    lc.insert(rng.choice(absent))
                else:
                    lc.remove(rng.choice(present))
            step(it)
    else:
        raise ValueError(f"unknown bench mode {mode!r}")
    return rows


def cmd_bench(args) -> int:
    program = qasm.parse_file(args.qasm)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.cores:
        cores = [int(c) for c in args.cores.split(",")]
        w.writerow(["threads", "iteration", "wall_time_ms", "executed_partitions"])
    else:
        cores = [args.threads]
        w.writerow(["iteration", "wall_time_ms", "executed_partitions"])
    for c in cores:
        rows = run_bench(program, args.mode, seed=args.seed, levels_per_iter=args.levels_per_iter,
                         iterations=args.iterations, block_size=args.block_size, threads=c)
        for it, ms, parts in rows:
            rec = [it, f"{ms:.3f}", parts]
            w.writerow([c] + rec if args.cores else rec)
    return 0


# entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="incqsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--block-size", type=_block_size, default=256)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: hardware concurrency)")

    sp = sub.add_parser("simulate", help="full simulation of an OpenQASM file")
    sp.add_argument("qasm")
    common(sp)
    sp.add_argument("--dump-graph", metavar="PATH")
    sp.add_argument("--emit", choices=("text", "json"), default="text")
    sp.add_argument("--top", type=int, default=16, help="largest-magnitude amplitudes to print")
    sp.add_argument("--all", action="store_true", help="print the full state vector")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("replay", help="replay a circuit-modifier trace")
    sp.add_argument("trace")
    common(sp)
    sp.add_argument("--verify", action="store_true", help="compare against the dense oracle")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("bench", help="incremental benchmark sweeps")
    sp.add_argument("qasm")
    sp.add_argument("--mode", choices=("insert-sweep", "remove-sweep", "mix"),
                    default="insert-sweep")
    common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--levels-per-iter", type=int, default=1)
    sp.add_argument("--iterations", type=int, default=50, help="mix mode iteration count")
    sp.add_argument("--cores", help="comma-separated thread counts to sweep, e.g. 1,2,4,8")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except qasm.UnsupportedGate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (qasm.ParseError, TraceError, SimulatorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
