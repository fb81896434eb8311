"""Gate definitions, the circuit/net data model and element-operation enumeration.

Qubit ``q`` is bit ``q`` of a state index, so the highest qubit is the most
significant bit.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

CLASSIFY_TOL = 1e-12


class SimulatorError(Exception):
    """Base class for errors raised by this package."""


class NetConflict(SimulatorError):
    """A gate would share a qubit with another gate of the same net."""


class UnknownNet(SimulatorError):
    pass


class UnknownGate(SimulatorError):
    pass


class BadQubit(SimulatorError):
    pass


class InvalidPosition(SimulatorError):
    pass


class SuperpositionGate(SimulatorError):
    """Element operations were requested for a gate that mixes basis states."""


class GateKind(enum.Enum):
    CNOT = "cx"
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    SWAP = "swap"

    @property
    def is_rotation(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZ)

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.CNOT, GateKind.SWAP) else 1

    @classmethod
    def parse(cls, name: str) -> GateKind:
        key = name.strip().lower()
        if key == "cnot":
            key = "cx"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown gate kind {name!r}") from None


class Mode(enum.Enum):
    NON_SUPERPOSITION = "non-superposition"
    SUPERPOSITION = "superposition"


_INV_SQRT2 = math.sqrt(0.5)  # correctly rounded, unlike 1/sqrt(2)
_T_PHASE = complex(_INV_SQRT2, _INV_SQRT2)

_FIXED = {
    GateKind.X: [[0, 1], [1, 0]],
    GateKind.Y: [[0, -1j], [1j, 0]],
    GateKind.Z: [[1, 0], [0, -1]],
    GateKind.H: [[_INV_SQRT2, _INV_SQRT2], [_INV_SQRT2, -_INV_SQRT2]],
    GateKind.S: [[1, 0], [0, 1j]],
    GateKind.SDG: [[1, 0], [0, -1j]],
    GateKind.T: [[1, 0], [0, _T_PHASE]],
    GateKind.TDG: [[1, 0], [0, _T_PHASE.conjugate()]],
    GateKind.CNOT: [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    GateKind.SWAP: [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
}


def gate_matrix(kind: GateKind, theta: float = 0.0) -> np.ndarray:
    """Dense unitary of ``kind``.

    Two-qubit matrices use the basis order ``|control, target>`` (CNOT) or
    ``|a, b>`` (SWAP), with the first-named qubit as the high bit.
    """
    if kind in _FIXED:
        return np.array(_FIXED[kind], dtype=np.complex128)
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if kind is GateKind.RX:
        m = [[c, -1j * s], [-1j * s, c]]
    elif kind is GateKind.RY:
        m = [[c, -s], [s, c]]
    elif kind is GateKind.RZ:
        m = [[complex(c, -s), 0], [0, complex(c, s)]]
    else:  # pragma: no cover
        raise ValueError(f"unsupported gate kind {kind}")
    return np.array(m, dtype=np.complex128)


def classify_gate(kind: GateKind, theta: float = 0.0) -> Mode:
    nonzero = np.abs(gate_matrix(kind, theta)) > CLASSIFY_TOL
    if np.all(nonzero.sum(axis=1) <= 1):
        return Mode.NON_SUPERPOSITION
    return Mode.SUPERPOSITION


@dataclass(eq=False)
class Gate:
    """A gate handle.

    ``control`` holds the control qubit of a CNOT and the second qubit of a
    SWAP; it is ``None`` for single-qubit kinds.
    """

    id: int
    kind: GateKind
    net: Net
    target: int
    control: int | None = None
    theta: float = 0.0
    alive: bool = True

    @property
    def name(self) -> str:
        return f"G{self.id}"

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.target, self.control)

    @property
    def mode(self) -> Mode:
        return classify_gate(self.kind, self.theta)

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.theta)

    def __repr__(self) -> str:
        args = ", ".join(f"q{q}" for q in self.qubits)
        if self.kind.is_rotation:
            return f"<{self.name} {self.kind.name}({self.theta:g}) {args}>"
        return f"<{self.name} {self.kind.name} {args}>"


@dataclass(eq=False)
class Net:
    """A group of structurally parallel gates occupying one circuit level."""

    id: int
    gates: list[Gate] = field(default_factory=list)
    alive: bool = True

    @property
    def name(self) -> str:
        return f"net{self.id}"

    def qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits}

    def __repr__(self) -> str:
        return f"<{self.name} {[g.name for g in self.gates]}>"


def check_net_conflict(net: Net, target: int, control: int | None = None) -> bool:
    """Return True if the candidate gate shares a qubit with a gate of ``net``."""
    used = net.qubits()
    return target in used or (control is not None and control in used)


class Circuit:
    """Ordered list of nets over ``n`` qubits plus a registry of live gates."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("a circuit needs at least one qubit")
        self.n = n
        self.nets: list[Net] = []
        self.gates: dict[int, Gate] = {}
        self._net_ids = itertools.count(1)
        self._gate_ids = itertools.count(1)

    def position(self, net: Net) -> int:
        if not net.alive:
            raise UnknownNet(f"{net.name} has been removed")
        for i, other in enumerate(self.nets):
            if other is net:
                return i
        raise UnknownNet(f"{net.name} is not part of this circuit")

    def insert_net(self, after: Net | None = None) -> Net:
        if after is None:
            pos = 0
        else:
            if not isinstance(after, Net) or not after.alive:
                raise InvalidPosition(f"cannot insert after {after!r}")
            try:
                pos = self.position(after) + 1
            except UnknownNet:
                raise InvalidPosition(f"cannot insert after {after!r}") from None
        net = Net(next(self._net_ids))
        self.nets.insert(pos, net)
        return net

    def remove_net(self, net: Net) -> None:
        pos = self.position(net)
        if net.gates:
            raise SimulatorError(f"{net.name} still holds gates")
        del self.nets[pos]
        net.alive = False

    def _check_qubit(self, q: int) -> None:
        if not isinstance(q, (int, np.integer)) or not 0 <= q < self.n:
            raise BadQubit(f"qubit {q!r} out of range for {self.n} qubits")

    def add_gate(
        self,
        kind: GateKind,
        net: Net,
        target: int,
        control: int | None = None,
        theta: float = 0.0,
    ) -> Gate:
        self.position(net)
        self._check_qubit(target)
        if kind.arity == 2:
            if control is None:
                raise BadQubit(f"{kind.name} needs two qubits")
            self._check_qubit(control)
            if control == target:
                raise BadQubit(f"{kind.name} qubits must differ")
        elif control is not None:
            raise BadQubit(f"{kind.name} takes a single qubit")
        if kind.is_rotation and not math.isfinite(theta):
            raise ValueError(f"rotation angle must be finite, got {theta}")
        if check_net_conflict(net, target, control):
            raise NetConflict(
                f"{kind.name} on {(target, control)} conflicts with gates of {net.name}"
            )
        gate = Gate(next(self._gate_ids), kind, net, int(target),
                    None if control is None else int(control), float(theta))
        net.gates.append(gate)
        self.gates[gate.id] = gate
        return gate

    def drop_gate(self, gate: Gate) -> None:
        if not isinstance(gate, Gate) or not gate.alive or self.gates.get(gate.id) is not gate:
            raise UnknownGate(f"{gate!r} is not part of this circuit")
        gate.net.gates.remove(gate)
        del self.gates[gate.id]
        gate.alive = False

    def iter_gates(self):
        for net in self.nets:
            yield from net.gates

    def __repr__(self) -> str:
        return f"<Circuit n={self.n} nets={len(self.nets)} gates={len(self.gates)}>"


@dataclass(frozen=True)
class ElementOps:
    """Independent element operations of one non-superposition gate.

    Arrays are aligned: op ``k`` touches ``i[k]`` (and ``j[k]`` for a swap).
    In scale mode ``j`` equals ``i`` and only ``scale_i`` is used.
    Ops are ordered by their smallest touched index.
    """

    swap: bool
    i: np.ndarray
    j: np.ndarray
    scale_i: np.ndarray
    scale_j: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    def as_tuples(self) -> list[tuple[int, int, complex, complex]]:
        return [(int(a), int(b), complex(x), complex(y))
                for a, b, x, y in zip(self.i, self.j, self.scale_i, self.scale_j)]


def _bit(idx: np.ndarray, q: int) -> np.ndarray:
    return (idx >> q) & 1


def element_ops(gate: Gate, n: int) -> ElementOps:
    """Enumerate the swap/scale operations that realise ``gate`` on ``n`` qubits."""
    kind, theta = gate.kind, gate.theta
    if classify_gate(kind, theta) is Mode.SUPERPOSITION:
        raise SuperpositionGate(f"{gate!r} forms superposition")
    idx = np.arange(1 << n, dtype=np.int64)
    m = gate_matrix(kind, theta)
    t = gate.target

    if kind is GateKind.CNOT:
        i = idx[(_bit(idx, gate.control) == 1) & (_bit(idx, t) == 0)]
        ones = np.ones(len(i), dtype=np.complex128)
        return ElementOps(True, i, i + (1 << t), ones, ones.copy())
    if kind is GateKind.SWAP:
        a, b = max(t, gate.control), min(t, gate.control)
        i = idx[(_bit(idx, a) == 0) & (_bit(idx, b) == 1)]
        ones = np.ones(len(i), dtype=np.complex128)
        return ElementOps(True, i, i + (1 << a) - (1 << b), ones, ones.copy())

    if abs(m[0, 0]) <= CLASSIFY_TOL:
        # anti-diagonal: out[i] = m01 * in[j], out[j] = m10 * in[i]
        i = idx[_bit(idx, t) == 0]
        return ElementOps(
            True, i, i + (1 << t),
            np.full(len(i), m[0, 1]), np.full(len(i), m[1, 0]),
        )

    # diagonal: indices whose phase is exactly 1 need no op
    d0, d1 = m[0, 0], m[1, 1]
    keep = np.zeros(len(idx), dtype=bool)
    bits = _bit(idx, t)
    if d0 != 1:
        keep |= bits == 0
    if d1 != 1:
        keep |= bits == 1
    i = idx[keep]
    scale = np.where(_bit(i, t) == 1, d1, d0).astype(np.complex128)
    return ElementOps(False, i, i.copy(), scale, scale.copy())
