"""Interpreter for a quantum process algebra with probabilistic measurement."""

from .context import Context, ProbContext, is_stable
from .errors import ElaborationError, ParseError, QProcError
from .explorer import (
    Policy,
    build_tree,
    final_quantum_state,
    outcome_distribution,
    resolved_leaves,
    sample_trace,
)
from .printer import pretty_print
from .program import Program, elaborate, load_program, parse_program
from .semantics import ExecState, initial_state, transitions

__all__ = [
    "Context",
    "ElaborationError",
    "ExecState",
    "ParseError",
    "Policy",
    "ProbContext",
    "Program",
    "QProcError",
    "build_tree",
    "elaborate",
    "final_quantum_state",
    "initial_state",
    "is_stable",
    "load_program",
    "outcome_distribution",
    "parse_program",
    "pretty_print",
    "resolved_leaves",
    "sample_trace",
    "transitions",
]
