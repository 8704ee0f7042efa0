"""Programs: named definitions plus the unitary/observable registries.

Elaboration classifies operator names by registry lookup, checks arities and
declarations, and renames every bound variable to a program-wide unique
``base#k`` form. It is idempotent: suffixes are stripped and renumbered in the
same traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from . import quantum
from .errors import ElaborationError
from .parser import Definition, parse_definitions
from .printer import format_program
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
    VarType,
    base_name,
)


@dataclass
class Program:
    definitions: dict[str, Definition]
    unitaries: Mapping[str, quantum.Unitary] = field(default_factory=quantum.default_unitaries)
    observables: Mapping[str, quantum.Observable] = field(
        default_factory=quantum.default_observables
    )
    elaborated: bool = False

    def body(self, name: str) -> Term:
        return self.definitions[name].body

    def formals(self, name: str) -> tuple[tuple[str, VarType], ...]:
        """Variables an invocation with arguments can bind, in binding order."""
        body = self.definitions[name].body
        return body.declarations if isinstance(body, Scope) else ()

    def source(self) -> str:
        return format_program(self.definitions.values())


def parse_program(text: str) -> Program:
    return Program({d.name: d for d in parse_definitions(text)})


def with_registries(program: Program, unitaries=None, observables=None) -> Program:
    """Copy of ``program`` with extra operators merged over the built-ins."""
    us = dict(program.unitaries)
    obs = dict(program.observables)
    for name in (unitaries or {}):
        if name in us or name in obs:
            raise ElaborationError(f"operator {name!r} is already defined")
    us.update(unitaries or {})
    for name in (observables or {}):
        if name in us or name in obs:
            raise ElaborationError(f"operator {name!r} is already defined")
    obs.update(observables or {})
    return replace(program, unitaries=us, observables=obs, elaborated=False)


class _Elaborator:
    def __init__(self, program: Program, unitaries, observables):
        self.program = program
        self.unitaries = unitaries
        self.observables = observables
        self.counters: dict[str, int] = {}

    def fresh(self, name: str) -> str:
        base = base_name(name)
        k = self.counters.get(base, 0) + 1
        self.counters[base] = k
        return f"{base}#{k}"

    def lookup(self, env, name, pos, want: VarType | None = None, role="variable") -> str:
        try:
            new, t = env[name]
        except KeyError:
            raise ElaborationError(f"use of undeclared variable {name!r}", pos) from None
        if want is not None and t is not want:
            raise ElaborationError(f"{role} {name!r} must have type {want.value}, not {t.value}", pos)
        return new

    def targets(self, env, names, pos) -> tuple[str, ...]:
        if len(set(names)) != len(names):
            raise ElaborationError(f"duplicate qubit in target list {list(names)}", pos)
        return tuple(self.lookup(env, n, pos, VarType.QUBIT, "target") for n in names)

    def check_arity(self, kind, name, arity, given, pos):
        if arity != given:
            raise ElaborationError(
                f"arity mismatch: {kind} {name} acts on {arity} qubit(s), given {given}", pos
            )

    def action(self, a, env):
        match a:
            case EmitValue():
                if a.value < 0:
                    raise ElaborationError("emitted value must be a natural number", a.pos)
                return a
            case EmitVar():
                return replace(a, var=self.lookup(env, a.var, a.pos, VarType.NAT, "emitted variable"))
            case Receive():
                return replace(a, var=self.lookup(env, a.var, a.pos))
            case EmitMeasure():
                obs = self.observables.get(a.observable)
                if obs is None:
                    raise ElaborationError(f"unknown observable {a.observable!r}", a.pos)
                self.check_arity("observable", a.observable, obs.arity, len(a.targets), a.pos)
                return replace(a, targets=self.targets(env, a.targets, a.pos))
            case ApplyUnitary() | MeasureOnly():
                name = a.unitary if isinstance(a, ApplyUnitary) else a.observable
                targets = self.targets(env, a.targets, a.pos)
                if name in self.unitaries:
                    self.check_arity("unitary", name, self.unitaries[name].arity, len(targets), a.pos)
                    return ApplyUnitary(name, targets, pos=a.pos)
                if name in self.observables:
                    self.check_arity("observable", name, self.observables[name].arity, len(targets), a.pos)
                    return MeasureOnly(name, targets, pos=a.pos)
                raise ElaborationError(f"unknown unitary or observable {name!r}", a.pos)
        raise TypeError(a)

    def cond(self, c: Cond, env) -> Cond:
        def elem(e):
            if isinstance(e, int):
                return e
            return self.lookup(env, e, c.pos, VarType.NAT, "condition operand")

        return replace(c, lhs=elem(c.lhs), rhs=elem(c.rhs))

    def invoke(self, t: Invoke, env) -> Invoke:
        if t.name not in self.program.definitions:
            raise ElaborationError(f"unknown process {t.name!r}", t.pos)
        if not t.args:
            return t
        formals = self.program.formals(t.name)
        if len(t.args) > len(formals):
            raise ElaborationError(
                f"arity mismatch: {t.name} binds {len(formals)} variable(s), given {len(t.args)}",
                t.pos,
            )
        if len(set(t.args)) != len(t.args):
            raise ElaborationError(f"duplicate argument in {t.name}{list(t.args)}", t.pos)
        args = []
        for actual, (formal, ftype) in zip(t.args, formals):
            args.append(self.lookup(env, actual, t.pos, ftype, f"argument for {base_name(formal)}"))
        return replace(t, args=tuple(args))

    def term(self, t: Term, env) -> Term:
        match t:
            case Nil() | End():
                return t
            case Invoke():
                return self.invoke(t, env)
            case Prefix(action, body):
                return Prefix(self.action(action, env), self.term(body, env))
            case Seq(left, right):
                return Seq(self.term(left, env), self.term(right, env))
            case Par(left, right, forked):
                return Par(self.term(left, env), self.term(right, env), forked)
            case Choice(branches):
                return replace(
                    t, branches=tuple((self.cond(c, env), self.term(p, env)) for c, p in branches)
                )
            case Restrict(body, gates):
                return Restrict(self.term(body, env), gates)
            case Block(body):
                return Block(self.term(body, env))
            case Scope(classical, quantum_vars, body):
                names = classical + quantum_vars
                seen = set()
                for n in names:
                    if n in seen:
                        raise ElaborationError(f"variable {n!r} declared twice in one declaration", t.pos)
                    seen.add(n)
                inner = dict(env)
                renamed = {}
                for n, vt in t.declarations:
                    renamed[n] = self.fresh(n)
                    inner[n] = (renamed[n], vt)
                return replace(
                    t,
                    classical=tuple(renamed[n] for n in classical),
                    quantum=tuple(renamed[n] for n in quantum_vars),
                    body=self.term(body, inner),
                )
        raise TypeError(t)


def elaborate(program: Program, unitaries=None, observables=None) -> Program:
    """Resolve names and check a parsed program.

    ``unitaries`` / ``observables`` default to the program's own registries.
    """
    us = program.unitaries if unitaries is None else unitaries
    obs = program.observables if observables is None else observables
    clash = set(us) & set(obs)
    if clash:
        raise ElaborationError(f"name used for both a unitary and an observable: {sorted(clash)}")
    el = _Elaborator(program, us, obs)
    defs = {}
    for name, d in program.definitions.items():
        defs[name] = replace(d, body=el.term(d.body, {}))
    return Program(defs, us, obs, elaborated=True)


def load_program(text: str, unitaries=None, observables=None) -> Program:
    """Parse and elaborate, with optional extra operators merged over the built-ins."""
    program = parse_program(text)
    if unitaries or observables:
        program = with_registries(program, unitaries, observables)
    return elaborate(program)
