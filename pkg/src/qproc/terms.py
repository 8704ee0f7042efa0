"""Abstract syntax of process terms.

Every node is a frozen dataclass, so terms are hashable values that can be
shared between the branches of an execution tree. Source positions ride along
for diagnostics and are ignored by equality and hashing.
"""

from __future__ import annotations

import enum
import operator
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Union

Pos = Union[tuple[int, int], None]


def _pos():
    return field(default=None, compare=False, repr=False)


class VarType(enum.Enum):
    NAT = "Nat"
    QUBIT = "Qubit"


# --- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class EmitValue:
    gate: str
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class EmitVar:
    gate: str
    var: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class EmitMeasure:
    """Measure ``targets`` with ``observable`` and send the eigenvalue on ``gate``."""

    gate: str
    observable: str
    targets: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Receive:
    gate: str
    var: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class ApplyUnitary:
    unitary: str
    targets: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class MeasureOnly:
    observable: str
    targets: tuple[str, ...]
    pos: Pos = _pos()


Action = Union[EmitValue, EmitVar, EmitMeasure, Receive, ApplyUnitary, MeasureOnly]


# --- conditions --------------------------------------------------------------

COMPARATORS: dict[str, Callable[[int, int], bool]] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
}


@dataclass(frozen=True)
class Cond:
    lhs: Union[str, int]
    op: str
    rhs: Union[str, int]
    pos: Pos = _pos()

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")

    def variables(self) -> tuple[str, ...]:
        return tuple(e for e in (self.lhs, self.rhs) if isinstance(e, str))


# --- processes ---------------------------------------------------------------


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class End:
    pass


@dataclass(frozen=True)
class Invoke:
    name: str
    args: tuple[str, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class Prefix:
    action: Action
    body: "Term"


@dataclass(frozen=True)
class Seq:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Par:
    left: "Term"
    right: "Term"
    # Set once the composition has pushed its fork node onto the environment
    # stack; never true in parsed programs.
    forked: bool = False


@dataclass(frozen=True)
class Choice:
    branches: tuple[tuple[Cond, "Term"], ...]
    pos: Pos = _pos()

    def __post_init__(self):
        if not self.branches:
            raise ValueError("choice needs at least one branch")


@dataclass(frozen=True)
class Restrict:
    body: "Term"
    gates: tuple[str, ...]

    def __post_init__(self):
        if not self.gates:
            raise ValueError("restriction needs at least one gate")


@dataclass(frozen=True)
class Scope:
    """Variable declaration block ``[nat[..] qubit[..]: body]``."""

    classical: tuple[str, ...]
    quantum: tuple[str, ...]
    body: "Term"
    pos: Pos = _pos()

    def __post_init__(self):
        if not self.classical and not self.quantum:
            raise ValueError("scope must declare at least one variable")

    @property
    def declarations(self) -> tuple[tuple[str, VarType], ...]:
        return tuple((n, VarType.NAT) for n in self.classical) + tuple(
            (n, VarType.QUBIT) for n in self.quantum
        )


@dataclass(frozen=True)
class Block:
    """A scope whose declarations have been pushed: ``P •`` at run time."""

    body: "Term"


Term = Union[Nil, End, Invoke, Prefix, Seq, Par, Choice, Restrict, Scope, Block]

NIL = Nil()
END = End()


# --- names -------------------------------------------------------------------

_SUFFIX = re.compile(r"[#~]")


def base_name(name: str) -> str:
    """Strip elaboration (``#n``) and run-time (``~n``) renaming suffixes."""
    return _SUFFIX.split(name, maxsplit=1)[0]


def action_variables(action: Action) -> tuple[str, ...]:
    match action:
        case EmitVar(var=v) | Receive(var=v):
            return (v,)
        case EmitMeasure(targets=ts) | ApplyUnitary(targets=ts) | MeasureOnly(targets=ts):
            return ts
    return ()


def _rename_action(action: Action, r: Callable[[str], str]) -> Action:
    match action:
        case EmitVar() | Receive():
            return replace(action, var=r(action.var))
        case EmitMeasure() | ApplyUnitary() | MeasureOnly():
            return replace(action, targets=tuple(r(t) for t in action.targets))
    return action


def _rename_cond(cond: Cond, r: Callable[[str], str]) -> Cond:
    lhs = r(cond.lhs) if isinstance(cond.lhs, str) else cond.lhs
    rhs = r(cond.rhs) if isinstance(cond.rhs, str) else cond.rhs
    return replace(cond, lhs=lhs, rhs=rhs)


def rename(term: Term, mapping: dict[str, str]) -> Term:
    """Rename variables (uses and declarations) according to ``mapping``."""
    if not mapping:
        return term

    def r(n: str) -> str:
        return mapping.get(n, n)

    def go(t: Term) -> Term:
        match t:
            case Nil() | End():
                return t
            case Invoke():
                return replace(t, args=tuple(r(a) for a in t.args))
            case Prefix(action, body):
                return Prefix(_rename_action(action, r), go(body))
            case Seq(left, right):
                return Seq(go(left), go(right))
            case Par(left, right, forked):
                return Par(go(left), go(right), forked)
            case Choice(branches):
                return replace(t, branches=tuple((_rename_cond(c, r), go(p)) for c, p in branches))
            case Restrict(body, gates):
                return Restrict(go(body), gates)
            case Scope(classical, quantum, body):
                return replace(
                    t,
                    classical=tuple(r(n) for n in classical),
                    quantum=tuple(r(n) for n in quantum),
                    body=go(body),
                )
            case Block(body):
                return Block(go(body))
        raise TypeError(f"not a process term: {t!r}")

    return go(term)


def declared_names(term: Term) -> list[str]:
    """All names declared by scopes inside ``term``, in traversal order."""
    out: list[str] = []

    def go(t: Term) -> None:
        match t:
            case Prefix(body=b) | Block(body=b) | Restrict(body=b):
                go(b)
            case Seq(left, right) | Par(left, right):
                go(left)
                go(right)
            case Choice(branches):
                for _, p in branches:
                    go(p)
            case Scope(classical, quantum, body):
                out.extend(classical)
                out.extend(quantum)
                go(body)

    go(term)
    return out
