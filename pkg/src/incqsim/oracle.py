"""Dense reference simulator.

Gates are applied one at a time with stride indexing on the full state
vector; no partitioning, fusion or copy-on-write is involved.
"""
from __future__ import annotations

import numpy as np

from .core import Circuit, Gate, GateKind, gate_matrix


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def _apply_1q(psi: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    v = psi.reshape(-1, 2, 1 << q)
    a, b = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    out[:, 0, :] = m[0, 0] * a + m[0, 1] * b
    out[:, 1, :] = m[1, 0] * a + m[1, 1] * b
    return out.reshape(-1)


def _apply_2q(psi: np.ndarray, m: np.ndarray, hi_q: int, lo_q: int, n: int) -> np.ndarray:
    """``m`` acts on ``|hi_q, lo_q>`` with ``hi_q`` as the high bit of the 4x4 basis."""
    t = psi.reshape((2,) * n)
    axes = (n - 1 - hi_q, n - 1 - lo_q)
    t = np.moveaxis(t, axes, (0, 1))
    shape = t.shape
    t = (m @ t.reshape(4, -1)).reshape(shape)
    return np.moveaxis(t, (0, 1), axes).reshape(-1)


def apply_gate_dense(psi: np.ndarray, kind: GateKind, target: int,
                     control: int | None = None, theta: float = 0.0) -> np.ndarray:
    """Return ``U psi`` for the Kronecker-lifted gate; ``psi`` is not modified."""
    n = psi.size.bit_length() - 1
    m = gate_matrix(kind, theta)
    if kind.arity == 1:
        return _apply_1q(psi, m, target)
    return _apply_2q(psi, m, control, target, n)


def apply(psi: np.ndarray, gate: Gate) -> np.ndarray:
    return apply_gate_dense(psi, gate.kind, gate.target, gate.control, gate.theta)


def simulate_dense(circuit: Circuit, psi: np.ndarray | None = None) -> np.ndarray:
    """Apply the nets of ``circuit`` in order starting from ``|0...0>``."""
    state = zero_state(circuit.n) if psi is None else psi.astype(np.complex128)
    for gate in circuit.iter_gates():
        state = apply(state, gate)
    return state


def simulate_gates(n: int, gates) -> np.ndarray:
    """Apply ``(kind, target, control, theta)`` tuples in order."""
    state = zero_state(n)
    for kind, target, control, theta in gates:
        state = apply_gate_dense(state, kind, target, control, theta)
    return state
