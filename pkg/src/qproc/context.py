"""Execution contexts: environment stack, qubit sequence, joint state, store.

The environment stack is a tuple of entries, bottom first. An entry is either
a ``Frame`` of declared variables or a ``Fork`` holding the private stack
segments of the two operands of a parallel composition. A parallel operand
sees its own segment stacked on the shared part below the fork, so the view
handed to each operand is always a plain path.

Contexts are immutable; every operation returns a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union

import numpy as np

from . import quantum
from .terms import VarType

TOL = 1e-9


class ContextError(RuntimeError):
    pass


@dataclass(frozen=True)
class Frame:
    bindings: tuple[tuple[str, VarType], ...]

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.bindings)


@dataclass(frozen=True)
class Fork:
    left: tuple["Entry", ...] = ()
    right: tuple["Entry", ...] = ()


Entry = Union[Frame, Fork]
Stack = tuple[Entry, ...]


def iter_bindings(stack: Stack) -> Iterator[tuple[str, VarType]]:
    """Every binding in the cactus stack, forks included, top first."""
    for entry in reversed(stack):
        if isinstance(entry, Frame):
            yield from entry.bindings
        else:
            yield from iter_bindings(entry.left)
            yield from iter_bindings(entry.right)


def stack_vars(stack: Stack) -> set[str]:
    return {n for n, _ in iter_bindings(stack)}


@dataclass(frozen=True, eq=False)
class Context:
    """``<stack, qseq = |state>, store>`` plus a counter for fresh names.

    ``qseq`` holds one slot per register qubit; a released qubit's slot is
    ``None`` (printed ``*``). ``store`` must not be mutated.
    """

    stack: Stack = ()
    qseq: tuple[str | None, ...] = ()
    state: np.ndarray = field(default_factory=quantum.empty_state, repr=False)
    store: Mapping[str, int] = field(default_factory=dict)
    fresh: int = 0

    def __post_init__(self):
        if len(self.qseq) != quantum.width_of(self.state):
            raise ContextError(
                f"qubit sequence has {len(self.qseq)} slots but state has width "
                f"{quantum.width_of(self.state)}"
            )

    # queries

    def vars(self) -> set[str]:
        return stack_vars(self.stack)

    def type_of(self, name: str) -> VarType | None:
        for n, t in iter_bindings(self.stack):
            if n == name:
                return t
        return None

    def slot(self, name: str) -> int | None:
        try:
            return self.qseq.index(name)
        except ValueError:
            return None

    def key(self) -> tuple:
        """Hashable identity, with amplitudes rounded to absorb float noise."""
        amps = np.round(self.state, 10) + 0.0
        return (
            self.stack,
            self.qseq,
            tuple(sorted(self.store.items())),
            amps.tobytes(),
            self.fresh,
        )

    def next_name(self, base: str) -> tuple[str, "Context"]:
        n = self.fresh + 1
        return f"{base}~{n}", replace(self, fresh=n)


@dataclass(frozen=True, eq=False)
class ProbBranch:
    probability: float
    context: Context
    # (observable, eigenvalue) that produced this branch, if any
    outcome: tuple[str, int] | None = None


@dataclass(frozen=True, eq=False)
class ProbContext:
    """Probabilistic combination of contexts; must be resolved before any action."""

    branches: tuple[ProbBranch, ...]

    def __post_init__(self):
        if not self.branches:
            raise ContextError("probabilistic context needs at least one branch")
        total = math.fsum(b.probability for b in self.branches)
        if abs(total - 1.0) > TOL:
            raise ContextError(f"branch probabilities sum to {total}, not 1")
        if any(not 0.0 < b.probability <= 1.0 + TOL for b in self.branches):
            raise ContextError("branch probability outside (0, 1]")

    def key(self) -> tuple:
        return tuple((round(b.probability, 12), b.context.key(), b.outcome) for b in self.branches)

    def map(self, fn) -> "ProbContext":
        return ProbContext(tuple(replace(b, context=fn(b.context)) for b in self.branches))


AnyContext = Union[Context, ProbContext]


def mix(branches) -> AnyContext:
    """Build a probabilistic context from ``(p, ctx)`` or ``ProbBranch`` items.

    A single branch of probability one collapses to the plain context.
    """
    items = tuple(b if isinstance(b, ProbBranch) else ProbBranch(*b) for b in branches)
    if len(items) == 1 and abs(items[0].probability - 1.0) <= TOL:
        return items[0].context
    return ProbContext(items)


def is_stable(ctx: AnyContext) -> bool:
    return isinstance(ctx, Context)


# --- stack discipline --------------------------------------------------------


def declare(ctx: Context, classical=(), quantum_vars=()) -> Context:
    bindings = tuple((n, VarType.NAT) for n in classical) + tuple(
        (n, VarType.QUBIT) for n in quantum_vars
    )
    return replace(ctx, stack=ctx.stack + (Frame(bindings),))


def _star(qseq, names) -> tuple[str | None, ...]:
    return tuple(None if s in names else s for s in qseq)


def _drop(store: Mapping[str, int], names) -> dict[str, int]:
    return {k: v for k, v in store.items() if k not in names}


def release_scope(ctx: Context) -> Context:
    """Pop the top frame; its qubits become freed slots, its classicals leave the store.

    The state vector is left untouched.
    """
    if not ctx.stack or not isinstance(ctx.stack[-1], Frame):
        raise ContextError("scope underflow: top of stack is not a declaration frame")
    names = set(ctx.stack[-1].names())
    return replace(
        ctx, stack=ctx.stack[:-1], qseq=_star(ctx.qseq, names), store=_drop(ctx.store, names)
    )


def fork(ctx: Context) -> Context:
    return replace(ctx, stack=ctx.stack + (Fork(),))


def join(ctx: Context) -> Context:
    """Discard the top fork, freeing everything declared in either branch."""
    if not ctx.stack or not isinstance(ctx.stack[-1], Fork):
        raise ContextError("join on a stack whose top is not a fork")
    top = ctx.stack[-1]
    names = stack_vars(top.left) | stack_vars(top.right)
    return replace(
        ctx, stack=ctx.stack[:-1], qseq=_star(ctx.qseq, names), store=_drop(ctx.store, names)
    )


def view(ctx: Context, side: str) -> Context:
    """Context seen by one operand of the fork on top: its segment on the shared base."""
    top = ctx.stack[-1]
    if not isinstance(top, Fork):
        raise ContextError("no fork on top of the stack")
    segment = top.left if side == "left" else top.right
    return replace(ctx, stack=ctx.stack[:-1] + segment)


def rebase(base: Stack, other: Stack, side: str, new_view: Context) -> Context:
    """Fold an operand's updated view back under the fork.

    ``other`` is the sibling's segment. Raises if the operand touched the shared
    part of the stack.
    """
    n = len(base)
    if new_view.stack[:n] != base:
        raise ContextError("parallel operand modified the shared environment stack")
    segment = new_view.stack[n:]
    node = Fork(segment, other) if side == "left" else Fork(other, segment)
    return replace(new_view, stack=base + (node,))


# --- classical store ---------------------------------------------------------


def set_classical(ctx: Context, name: str, value: int) -> Context:
    t = ctx.type_of(name)
    if t is None:
        raise ContextError(f"undeclared variable {name!r}")
    if t is not VarType.NAT:
        raise ContextError(f"variable {name!r} has type {t.value}, not Nat")
    if value < 0:
        raise ContextError(f"value {value} is not a natural number")
    return replace(ctx, store={**ctx.store, name: value})


def get_value(ctx: Context, name: str) -> int:
    if ctx.type_of(name) is None:
        raise ContextError(f"undeclared variable {name!r}")
    try:
        return ctx.store[name]
    except KeyError:
        raise ContextError(f"variable {name!r} is unset") from None


def init_qubit_var(ctx: Context, name: str, bit: int) -> Context:
    if ctx.type_of(name) is not VarType.QUBIT:
        raise ContextError(f"{name!r} is not a declared qubit")
    if name in ctx.qseq:
        raise ContextError(f"qubit {name!r} is already initialised")
    return replace(ctx, qseq=(name,) + ctx.qseq, state=quantum.init_qubit(ctx.state, bit))
