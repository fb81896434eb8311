"""OpenQASM 2.0 subset reader and ASAP levelizer.

Accepted: the ``OPENQASM 2.0;`` header, ``include`` lines, a single ``qreg``,
any number of ``creg`` declarations, ``barrier`` and the gates
cx, x, y, z, h, s, sdg, t, tdg, rx, ry, rz, swap. A single-qubit gate applied
to a bare register name is broadcast over all of its qubits.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from typing import Sequence

from .core import GateKind, SimulatorError

GATES = {
    "cx": GateKind.CNOT, "x": GateKind.X, "y": GateKind.Y, "z": GateKind.Z,
    "h": GateKind.H, "s": GateKind.S, "sdg": GateKind.SDG, "t": GateKind.T,
    "tdg": GateKind.TDG, "rx": GateKind.RX, "ry": GateKind.RY, "rz": GateKind.RZ,
    "swap": GateKind.SWAP,
}
NAMES = {v: k for k, v in GATES.items()}


class ParseError(SimulatorError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}" if line else message)
        self.line = line
        self.column = column


class UnsupportedGate(ParseError):
    pass


@dataclass(frozen=True)
class Statement:
    name: str
    params: tuple[float, ...] = ()
    qubits: tuple[int, ...] = ()
    line: int = 0
    column: int = 0

    @property
    def kind(self) -> GateKind | None:
        return GATES.get(self.name)

    @property
    def is_barrier(self) -> bool:
        return self.name == "barrier"


@dataclass
class QasmProgram:
    n: int
    statements: list[Statement] = field(default_factory=list)
    qreg: str = "q"

    def gates(self) -> list[Statement]:
        return [s for s in self.statements if not s.is_barrier]


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt}


def eval_angle(text: str) -> float:
    """Evaluate a real parameter expression such as ``-pi/4`` or ``2*pi/3``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        value = ev(ast.parse(text.strip().replace("^", "**"), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"bad expression {text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite angle {text!r}")
    return value


_COMMENT = re.compile(r"//[^\n]*")
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_DECL = re.compile(rf"^(qreg|creg)\s+({_IDENT})\s*\[\s*(\d+)\s*\]$")
_GATE = re.compile(rf"^({_IDENT})\s*(?:\((.*)\))?\s*(.*)$", re.S)
_OPERAND = re.compile(rf"^({_IDENT})\s*(?:\[\s*(\d+)\s*\])?$")
_UNSUPPORTED_KEYWORDS = {"measure", "reset", "if", "gate", "opaque"}


def _split_statements(text: str):
    """Yield (statement text, line, column) with comments blanked out."""
    clean = _COMMENT.sub(lambda m: " " * len(m.group()), text)
    start = 0
    for k, ch in enumerate(clean):
        if ch == ";":
            body = clean[start:k]
            stripped = body.strip()
            if stripped:
                off = start + len(body) - len(body.lstrip())
                line = clean.count("\n", 0, off) + 1
                col = off - (clean.rfind("\n", 0, off) + 1) + 1
                yield stripped, line, col
            start = k + 1
    rest = clean[start:]
    if rest.strip():
        off = start + len(rest) - len(rest.lstrip())
        line = clean.count("\n", 0, off) + 1
        col = off - (clean.rfind("\n", 0, off) + 1) + 1
        raise ParseError("missing ';'", line, col)


def parse(text: str) -> QasmProgram:
    n = None
    qreg = None
    cregs: set[str] = set()
    statements: list[Statement] = []
    seen_header = False
    for body, line, col in _split_statements(text):
        word = body.split(None, 1)[0].split("(", 1)[0]
        if word == "OPENQASM":
            if seen_header or statements or n is not None:
                raise ParseError("misplaced OPENQASM header", line, col)
            version = body.split(None, 1)[1].strip() if " " in body else ""
            if not version.startswith("2"):
                raise ParseError(f"unsupported OpenQASM version {version!r}", line, col)
            seen_header = True
            continue
        if word == "include":
            continue
        m = _DECL.match(body)
        if m:
            kind, name, size = m.group(1), m.group(2), int(m.group(3))
            if kind == "creg":
                cregs.add(name)
                continue
            if qreg is not None:
                raise ParseError("only one quantum register is supported", line, col)
            if size < 1:
                raise ParseError("empty quantum register", line, col)
            qreg, n = name, size
            continue
        if word in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedGate(f"'{word}' is not supported", line, col)
        m = _GATE.match(body)
        if not m:
            raise ParseError(f"cannot parse {body!r}", line, col)
        name, params_text, operands_text = m.group(1), m.group(2), m.group(3)
        if name != "barrier" and name not in GATES:
            raise UnsupportedGate(f"unsupported gate '{name}'", line, col)
        if qreg is None:
            raise ParseError(f"'{name}' before qreg declaration", line, col)
        params: tuple[float, ...] = ()
        if params_text is not None and params_text.strip():
            try:
                params = tuple(eval_angle(p) for p in params_text.split(","))
            except ValueError as exc:
                raise ParseError(str(exc), line, col) from None
        kind = GATES.get(name)
        wanted = 1 if kind is not None and kind.is_rotation else 0
        if name != "barrier" and len(params) != wanted:
            raise ParseError(f"'{name}' takes {wanted} parameter(s)", line, col)
        groups = []
        for op in (o.strip() for o in operands_text.split(",")):
            om = _OPERAND.match(op)
            if not om:
                raise ParseError(f"bad operand {op!r}", line, col)
            reg, idx = om.group(1), om.group(2)
            if reg != qreg:
                raise ParseError(f"unknown quantum register '{reg}'", line, col)
            if idx is None:
                groups.append(list(range(n)))
            else:
                q = int(idx)
                if q >= n:
                    raise ParseError(f"qubit index {q} out of range", line, col)
                groups.append([q])
        if name == "barrier":
            qubits = tuple(sorted({q for g in groups for q in g}))
            statements.append(Statement("barrier", (), qubits, line, col))
            continue
        if len(groups) != kind.arity:
            raise ParseError(f"'{name}' takes {kind.arity} operand(s)", line, col)
        if kind.arity == 1:
            for q in groups[0]:
                statements.append(Statement(name, params, (q,), line, col))
        else:
            if any(len(g) != 1 for g in groups):
                raise ParseError(f"register broadcast not supported for '{name}'", line, col)
            a, b = groups[0][0], groups[1][0]
            if a == b:
                raise ParseError(f"'{name}' operands must differ", line, col)
            statements.append(Statement(name, params, (a, b), line, col))
    if qreg is None:
        raise ParseError("no quantum register declared")
    return QasmProgram(n, statements, qreg)


def parse_file(path) -> QasmProgram:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def to_qasm(program: QasmProgram) -> str:
    """Render ``program`` back to OpenQASM text (angles in radians, full precision)."""
    reg = program.qreg
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg {reg}[{program.n}];"]
    for s in program.statements:
        ops = ",".join(f"{reg}[{q}]" for q in s.qubits)
        if s.is_barrier:
            lines.append(f"barrier {ops};")
        elif s.params:
            lines.append(f"{s.name}({','.join(repr(p) for p in s.params)}) {ops};")
        else:
            lines.append(f"{s.name} {ops};")
    return "\n".join(lines) + "\n"


def levelize(program: QasmProgram) -> list[list[Statement]]:
    """Group gate statements into ASAP levels; a barrier starts a fresh level."""
    last: dict[int, int] = {}
    floor = 0
    top = -1
    levels: dict[int, list[Statement]] = {}
    for s in program.statements:
        if s.is_barrier:
            floor = top + 1
            continue
        level = max([floor] + [last[q] + 1 for q in s.qubits if q in last])
        for q in s.qubits:
            last[q] = level
        top = max(top, level)
        levels.setdefault(level, []).append(s)
    return [levels[k] for k in sorted(levels)]


def gate_args(s: Statement) -> tuple[GateKind, int, int | None, float]:
    """Map a statement to (kind, target, control, theta) in engine argument order."""
    kind = s.kind
    theta = s.params[0] if s.params else 0.0
    if kind is GateKind.CNOT:
        control, target = s.qubits
        return kind, target, control, theta
    if kind is GateKind.SWAP:
        a, b = s.qubits
        return kind, a, b, theta
    return kind, s.qubits[0], None, theta


def load(program: QasmProgram, block_size: int = 256, threads: int | None = None):
    """Build a :class:`~incqsim.engine.Simulator` with one net per level."""
    from .engine import Simulator

    sim = Simulator(program.n, block_size, threads)
    populate(sim, levelize(program))
    return sim


def populate(sim, levels: Sequence[Sequence[Statement]]):
    net = sim.circuit.nets[-1] if sim.circuit.nets else None
    nets = []
    for level in levels:
        net = sim.insert_net(net)
        nets.append(net)
        for s in level:
            kind, target, control, theta = gate_args(s)
            sim.insert_gate(kind, net, target, control, theta=theta)
    return nets
