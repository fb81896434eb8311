"""Incremental, task-parallel state-vector quantum circuit simulation."""
from .core import (BadQubit, Circuit, Gate, GateKind, InvalidPosition, Mode, Net,
                   NetConflict, SimulatorError, SuperpositionGate, UnknownGate,
                   UnknownNet, check_net_conflict, classify_gate, element_ops,
                   gate_matrix)
from .engine import NumericError, Simulator, StaleState, UpdateReport, affected_set
from .graph import PartitionGraph, build_full, dump_dot
from .oracle import apply_gate_dense, simulate_dense
from .plan import Config
from .qasm import ParseError, UnsupportedGate, levelize, load, parse

__version__ = "0.1.0"

__all__ = [
    "BadQubit", "Circuit", "Config", "Gate", "GateKind", "InvalidPosition", "Mode", "Net",
    "NetConflict", "NumericError", "ParseError", "PartitionGraph", "Simulator",
    "SimulatorError", "StaleState", "SuperpositionGate", "UnknownGate", "UnknownNet",
    "UnsupportedGate", "UpdateReport", "affected_set", "apply_gate_dense", "build_full",
    "check_net_conflict", "classify_gate", "dump_dot", "element_ops", "gate_matrix",
    "levelize", "load", "parse", "simulate_dense",
]
