import math
import random

import numpy as np
import pytest

from incqsim import GateKind, NetConflict, Simulator

K = GateKind
ONE_QUBIT = [K.X, K.Y, K.Z, K.H, K.S, K.SDG, K.T, K.TDG, K.RX, K.RY, K.RZ]
ANGLES = [math.pi, math.pi / 2, -math.pi / 4, 2 * math.pi, 0.0]


def build_listing1(block_size=4, threads=1):
    """The five-qubit example: five H gates then four CNOTs in separate nets."""
    sim = Simulator(5, block_size=block_size, threads=threads)
    q4, q3, q2, q1, q0 = sim.qubits()
    net1 = sim.insert_net()
    net2 = sim.insert_net(net1)
    net3 = sim.insert_net(net2)
    net4 = sim.insert_net(net3)
    net5 = sim.insert_net(net4)
    g = {}
    for k, q in enumerate((q4, q3, q2, q1, q0), 1):
        g[k] = sim.insert_gate(K.H, net1, q)
    g[6] = sim.insert_gate(K.CNOT, net2, q3, q4)
    g[7] = sim.insert_gate(K.CNOT, net3, q1, q4)
    g[8] = sim.insert_gate(K.CNOT, net4, q2, q3)
    g[9] = sim.insert_gate(K.CNOT, net5, q0, q2)
    nets = {1: net1, 2: net2, 3: net3, 4: net4, 5: net5}
    return sim, nets, g


@pytest.fixture
def listing1():
    return build_listing1()


def random_gate_args(rng: random.Random, n: int):
    """(kind, target, control, theta) drawn over every supported kind."""
    kinds = ONE_QUBIT + ([K.CNOT, K.CNOT, K.SWAP] if n > 1 else [])
    kind = rng.choice(kinds)
    if kind.arity == 2:
        a, b = rng.sample(range(n), 2)
        return kind, a, b, 0.0
    theta = 0.0
    if kind.is_rotation:
        theta = rng.choice(ANGLES) if rng.random() < 0.5 else rng.uniform(-math.pi, math.pi)
    return kind, rng.randrange(n), None, theta


def random_circuit(rng: random.Random, n: int, ngates: int, block_size: int, threads=1):
    """Append random gates; a gate joins the last net unless it conflicts."""
    sim = Simulator(n, block_size=block_size, threads=threads)
    net = sim.append_net()
    for _ in range(ngates):
        kind, t, c, theta = random_gate_args(rng, n)
        if rng.random() < 0.3:
            net = sim.append_net()
        try:
            sim.insert_gate(kind, net, t, c, theta=theta)
        except NetConflict:
            net = sim.append_net()
            sim.insert_gate(kind, net, t, c, theta=theta)
    return sim


def random_modifiers(sim: Simulator, rng: random.Random, steps: int, check=None):
    """Apply random insert/remove modifiers with interleaved updates."""
    n = sim.n
    for _ in range(steps):
        r = rng.random()
        nets = sim.nets()
        gates = sim.gates()
        if r < 0.15 or not nets:
            after = rng.choice(nets + [None]) if nets else None
            sim.insert_net(after)
        elif r < 0.6:
            kind, t, c, theta = random_gate_args(rng, n)
            try:
                sim.insert_gate(kind, rng.choice(nets), t, c, theta=theta)
            except NetConflict:
                pass
        elif r < 0.85 and gates:
            sim.remove_gate(rng.choice(gates))
        elif r < 0.92:
            sim.remove_net(rng.choice(nets))
        else:
            sim.update_state()
            if check is not None:
                check(sim)


def max_dev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
