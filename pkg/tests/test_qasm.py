import math
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incqsim import GateKind
from incqsim.oracle import simulate_dense
from incqsim.qasm import (GATES, ParseError, UnsupportedGate, eval_angle, levelize, load,
                          parse, parse_file, to_qasm)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def test_minimal_bell_prelude():
    prog = parse("OPENQASM 2.0; qreg q[2]; h q[0]; cx q[0],q[1];")
    assert prog.n == 2
    assert [(s.name, s.qubits) for s in prog.statements] == [("h", (0,)), ("cx", (0, 1))]


def test_measure_rejected():
    with pytest.raises(UnsupportedGate):
        parse(HEADER + "qreg q[1]; creg c[1];\nmeasure q[0] -> c[0];")


@pytest.mark.parametrize("stmt", ["ccx q[0],q[1],q[2];", "u3(0.1,0.2,0.3) q[0];",
                                  "u1(0.5) q[1];", "if(c==1) x q[0];", "reset q[0];"])
def test_unsupported(stmt):
    with pytest.raises(UnsupportedGate):
        parse(HEADER + "qreg q[3]; creg c[3];\n" + stmt)


def test_rx_pi():
    prog = parse(HEADER + "qreg q[4];\nrx(pi) q[3];")
    (s,) = prog.statements
    assert s.kind is GateKind.RX and s.params == (math.pi,) and s.qubits == (3,)


@pytest.mark.parametrize("text,value", [("pi/2", math.pi / 2), ("-pi/4", -math.pi / 4),
                                        ("2*pi", 2 * math.pi), ("0.25", 0.25),
                                        ("3*pi/8 + 1", 3 * math.pi / 8 + 1),
                                        ("sqrt(2)", math.sqrt(2))])
def test_eval_angle(text, value):
    assert eval_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("text", ["__import__('os')", "x", "pi/0", "1e999*1e999"])
def test_eval_angle_rejects(text):
    with pytest.raises(ValueError):
        eval_angle(text)


def test_parse_error_location():
    with pytest.raises(ParseError) as info:
        parse(HEADER + "qreg q[2];\nh q[0];\n  cx q[0],q[5];")
    assert (info.value.line, info.value.column) == (5, 3)
    with pytest.raises(ParseError):
        parse(HEADER + "qreg q[2];\nh q[0]")
    with pytest.raises(ParseError):
        parse(HEADER + "qreg q[2]; qreg r[2];")
    with pytest.raises(ParseError):
        parse(HEADER + "qreg q[2]; rx q[0];")


def test_comments_and_broadcast():
    prog = parse(HEADER + "// a comment\nqreg q[3]; // trailing\nh q;\n")
    assert [s.qubits for s in prog.statements] == [(0,), (1,), (2,)]


def test_levelize_single_gate():
    assert len(levelize(parse(HEADER + "qreg q[1]; x q[0];"))) == 1


def test_levelize_hh_cx():
    levels = levelize(parse(HEADER + "qreg q[2]; h q[0]; h q[1]; cx q[0],q[1];"))
    assert [[s.name for s in lv] for lv in levels] == [["h", "h"], ["cx"]]


def test_levelize_listing_with_barriers():
    levels = levelize(parse_file(SAMPLES / "listing1.qasm"))
    assert [len(lv) for lv in levels] == [5, 1, 1, 1, 1]


def test_levelize_listing_asap_without_barriers():
    text = (SAMPLES / "listing1.qasm").read_text().replace("barrier q;\n", "")
    levels = levelize(parse(text))
    # CNOT(q4->q1) and CNOT(q3->q2) touch disjoint qubits and share a level
    assert [[s.qubits for s in lv] for lv in levels] == [
        [(0,), (1,), (2,), (3,), (4,)], [(4, 3)], [(4, 1), (3, 2)], [(2, 0)]]


def _brute_levels(stmts):
    level = []
    for k, s in enumerate(stmts):
        deps = [level[j] for j in range(k) if set(stmts[j].qubits) & set(s.qubits)]
        level.append(1 + max(deps) if deps else 0)
    return level


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["h", "x", "cx", "swap", "rz"]),
                          st.integers(0, 4), st.integers(1, 4)), max_size=25))
def test_levelize_matches_brute_force(ops):
    lines = []
    for name, a, d in ops:
        b = (a + d) % 5
        if name in ("cx", "swap"):
            lines.append(f"{name} q[{a}],q[{b}];")
        elif name == "rz":
            lines.append(f"rz(0.5) q[{a}];")
        else:
            lines.append(f"{name} q[{a}];")
    prog = parse(HEADER + "qreg q[5];\n" + "\n".join(lines))
    levels = levelize(prog)
    got = {id(s): k for k, lv in enumerate(levels) for s in lv}
    expect = _brute_levels(prog.statements)
    assert [got[id(s)] for s in prog.statements] == expect
    for lv in levels:
        used = [q for s in lv for q in s.qubits]
        assert len(used) == len(set(used))


@pytest.mark.parametrize("body,index", [
    ("x q[0]; cx q[0],q[1];", 0b011),
    ("x q[1]; cx q[0],q[1];", 0b010),
    ("x q[2]; cx q[2],q[0];", 0b101),
    ("x q[0]; swap q[0],q[2];", 0b100),
])
def test_cx_operand_order(body, index):
    sim = load(parse(HEADER + "qreg q[3];\n" + body), block_size=2, threads=1)
    sim.update_state()
    assert np.array_equal(sim.state(), np.eye(8)[index])


def test_round_trip():
    rng = random.Random(4)
    names = sorted(GATES)
    for _ in range(30):
        lines = []
        for _ in range(rng.randint(1, 15)):
            name = rng.choice(names + ["barrier"])
            a, b = rng.sample(range(4), 2)
            kind = GateKind.parse(name) if name != "barrier" else None
            if name == "barrier":
                lines.append("barrier q;")
            elif kind.arity == 2:
                lines.append(f"{name} q[{a}],q[{b}];")
            elif kind.is_rotation:
                lines.append(f"{name}({rng.uniform(-4, 4)!r}) q[{a}];")
            else:
                lines.append(f"{name} q[{a}];")
        prog = parse(HEADER + "qreg q[4];\n" + "\n".join(lines))
        again = parse(to_qasm(prog))
        assert [(s.name, s.params, s.qubits) for s in again.statements] == \
            [(s.name, s.params, s.qubits) for s in prog.statements]


def test_load_matches_oracle():
    sim = load(parse_file(SAMPLES / "listing1.qasm"), block_size=4, threads=1)
    sim.update_state()
    assert len(sim.nets()) == 5
    assert np.max(np.abs(sim.state() - simulate_dense(sim.circuit))) <= 1e-12
