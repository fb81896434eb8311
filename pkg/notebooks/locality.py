"""
Where a change happens matters
==============================

A 15-qubit chain of CNOTs behind a layer of Hadamards. Replacing a gate
early in the circuit dirties everything downstream of it; replacing one
near the end touches almost nothing.
"""

from incqsim import GateKind, Simulator

N, DEPTH = 15, 100


def chain():
    sim = Simulator(N, threads=1)
    first = sim.append_net()
    for q in range(N):
        sim.insert_gate(GateKind.H, first, q)
    gates = [sim.insert_gate(GateKind.CNOT, sim.append_net(), (k + 1) % N, k % N)
             for k in range(DEPTH)]
    sim.update_state()
    return sim, gates


for position in (0, 25, 50, 75, 99):
    sim, gates = chain()
    g = gates[position]
    net, target, control = g.net, g.target, g.control
    sim.remove_gate(g)
    sim.insert_gate(GateKind.CNOT, net, target, control)
    report = sim.update_state()
    print(f"replace CNOT #{position:2d}: {report.executed_partitions:5d} partitions, "
          f"{report.elapsed_ms:7.2f} ms")
