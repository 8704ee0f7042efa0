"""Pretty-printer producing text the parser reads back to the same term."""

from __future__ import annotations

from .terms import (
    ApplyUnitary,
    Block,
    Choice,
    Cond,
    EmitMeasure,
    EmitValue,
    EmitVar,
    End,
    Invoke,
    MeasureOnly,
    Nil,
    Par,
    Prefix,
    Receive,
    Restrict,
    Scope,
    Seq,
    Term,
)

# binding levels, loosest first
_PAR, _SEQ, _UNARY, _ATOM = range(4)


def _args(names) -> str:
    return "[" + ",".join(names) + "]"


def format_action(action) -> str:
    match action:
        case EmitValue(gate, value):
            return f"{gate}!{value}"
        case EmitVar(gate, var):
            return f"{gate}!{var}"
        case EmitMeasure(gate, obs, targets):
            return f"{gate}!{obs}{_args(targets)}"
        case Receive(gate, var):
            return f"{gate}?{var}"
        case ApplyUnitary(name, targets) | MeasureOnly(name, targets):
            return f"{name}{_args(targets)}"
    raise TypeError(f"not an action: {action!r}")


def format_cond(cond: Cond) -> str:
    return f"{cond.lhs} {cond.op} {cond.rhs}"


def _level(term: Term) -> int:
    match term:
        case Par():
            return _PAR
        case Seq():
            return _SEQ
        case Prefix():
            return _UNARY
    return _ATOM


def _show(term: Term, need: int) -> str:
    text = _render(term)
    return f"({text})" if _level(term) < need else text


def _render(term: Term) -> str:
    match term:
        case Nil():
            return "nil"
        case End():
            return "end"
        case Invoke(name, args):
            return name + (_args(args) if args else "")
        case Prefix(action, body):
            return f"{format_action(action)} . {_show(body, _UNARY)}"
        case Seq(left, right):
            return f"{_show(left, _SEQ)} ; {_show(right, _UNARY)}"
        case Par(left, right):
            return f"{_show(left, _PAR)} || {_show(right, _SEQ)}"
        case Choice(branches):
            arms = " ".join(f"[] {format_cond(c)} -> {_render(p)}" for c, p in branches)
            return f"({arms})"
        case Restrict(body, gates):
            return f"{_show(body, _ATOM)} |{{{','.join(gates)}}}"
        case Scope(classical, quantum, body):
            decls = []
            if classical:
                decls.append("nat" + _args(classical))
            if quantum:
                decls.append("qubit" + _args(quantum))
            return f"[{' '.join(decls)}: {_render(body)}]"
        case Block(body):
            # run-time only; not parseable
            return f"({_render(body)})•"
    raise TypeError(f"not a process term: {term!r}")


def pretty_print(term: Term) -> str:
    return _render(term)


def format_program(definitions) -> str:
    """Render an iterable of definitions (objects with ``name`` and ``body``)."""
    return "".join(f"{d.name} = {pretty_print(d.body)}\n" for d in definitions)
