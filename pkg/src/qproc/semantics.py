"""Small-step transition relation over ``term / context`` states.

``transitions`` enumerates every applicable rule instance for a state, in a
fixed syntactic left-to-right order so runs are reproducible:

* an unstable (probabilistic) context only resolves, one ``Prob`` edge per branch;
* otherwise the term's rules fire against the plain context.

Process invocations in active positions are unfolded before the rules run;
unfolding is a structural identity, not a transition.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from . import context as C
from . import quantum
from . import terms as T
from .context import AnyContext, Context, ProbBranch, ProbContext, is_stable
from .program import Program
from .terms import VarType

MAX_UNFOLD_DEPTH = 200


class EvaluationError(RuntimeError):
    pass


class RecursionLimitError(RuntimeError):
    pass


# --- labels ------------------------------------------------------------------


@dataclass(frozen=True)
class Emit:
    gate: str
    value: int


@dataclass(frozen=True)
class Receive:
    gate: str
    var: str


@dataclass(frozen=True)
class Tau:
    pass


@dataclass(frozen=True)
class Delta:
    pass


@dataclass(frozen=True)
class Decl:
    pass


@dataclass(frozen=True)
class Prob:
    p: float
    observable: str | None = None
    eigenvalue: int | None = None

    @property
    def outcome(self) -> tuple[str, int] | None:
        if self.observable is None:
            return None
        return (self.observable, self.eigenvalue)


Label = Union[Emit, Receive, Tau, Delta, Decl, Prob]

TAU, DELTA, DECL = Tau(), Delta(), Decl()


def is_open(label: Label) -> bool:
    return isinstance(label, (Emit, Receive))


def format_label(label: Label) -> str:
    match label:
        case Emit(gate, value):
            return f"{gate}!{value}"
        case Receive(gate, var):
            return f"{gate}?{T.base_name(var)}"
        case Tau():
            return "tau"
        case Delta():
            return "delta"
        case Decl():
            return "decl"
        case Prob(p, obs, lam):
            tail = f" {obs}={lam}" if obs is not None else ""
            return f"prob({p:.12g}){tail}"
    raise TypeError(label)


# --- states ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExecState:
    term: T.Term
    ctx: AnyContext

    def key(self) -> tuple:
        return (self.term, self.ctx.key())


def initial_state(program: Program, entry: str = "Main") -> ExecState:
    if entry not in program.definitions:
        raise KeyError(f"no process named {entry!r}")
    return ExecState(T.Invoke(entry), Context())


# --- helpers -----------------------------------------------------------------


def eval_cond(cond: T.Cond, store) -> bool:
    def value(e):
        if isinstance(e, int):
            return e
        try:
            return store[e]
        except KeyError:
            raise EvaluationError(f"condition reads unset variable {T.base_name(e)!r}") from None

    return T.COMPARATORS[cond.op](value(cond.lhs), value(cond.rhs))


def unfold(invoke: T.Invoke, program: Program, ctx: Context) -> tuple[T.Term, Context]:
    """Body of the invoked definition with actuals bound and local names freshened.

    Arguments replace the first declared variables of the definition's leading
    scope (whose declarations are dropped). The context only advances its
    fresh-name counter.
    """
    try:
        body = program.definitions[invoke.name].body
    except KeyError:
        raise EvaluationError(f"unknown process {invoke.name!r}") from None
    mapping: dict[str, str] = {}
    if invoke.args:
        formals = program.formals(invoke.name)
        if len(invoke.args) > len(formals):
            raise EvaluationError(
                f"arity mismatch: {invoke.name} binds {len(formals)} variable(s), "
                f"given {len(invoke.args)}"
            )
        bound = {f for f, _ in formals[: len(invoke.args)]}
        mapping.update(zip((f for f, _ in formals), invoke.args))
        classical = tuple(n for n in body.classical if n not in bound)
        quantum_vars = tuple(n for n in body.quantum if n not in bound)
        if classical or quantum_vars:
            body = replace(body, classical=classical, quantum=quantum_vars)
        else:
            body = body.body
    for name in T.declared_names(body):
        mapping[name], ctx = ctx.next_name(T.base_name(name))
    return T.rename(body, mapping), ctx


def _activate(t: T.Term, ctx: Context, program: Program, depth: int = 0):
    """Unfold invocations wherever the next transition could originate."""
    if depth > MAX_UNFOLD_DEPTH:
        raise RecursionLimitError(f"process unfolding exceeded depth {MAX_UNFOLD_DEPTH}")
    match t:
        case T.Invoke():
            body, ctx = unfold(t, program, ctx)
            return _activate(body, ctx, program, depth + 1)
        case T.Seq(left, right):
            left2, ctx = _activate(left, ctx, program, depth)
            return (t if left2 is left else T.Seq(left2, right)), ctx
        case T.Par(left, right, forked):
            left2, ctx = _activate(left, ctx, program, depth)
            right2, ctx = _activate(right, ctx, program, depth)
            if left2 is left and right2 is right:
                return t, ctx
            return T.Par(left2, right2, forked), ctx
        case T.Block(body):
            body2, ctx = _activate(body, ctx, program, depth)
            return (t if body2 is body else T.Block(body2)), ctx
        case T.Restrict(body, gates):
            body2, ctx = _activate(body, ctx, program, depth)
            return (t if body2 is body else T.Restrict(body2, gates)), ctx
        case T.Choice(branches):
            out, changed = [], False
            for cond, p in branches:
                p2, ctx = _activate(p, ctx, program, depth)
                changed |= p2 is not p
                out.append((cond, p2))
            return (replace(t, branches=tuple(out)) if changed else t), ctx
    return t, ctx


def _positions(ctx: Context, targets) -> list[int] | None:
    """Register slots of ``targets``, or None if one is undeclared or uninitialised."""
    out = []
    for x in targets:
        if ctx.type_of(x) is not VarType.QUBIT:
            return None
        slot = ctx.slot(x)
        if slot is None:
            return None
        out.append(slot)
    return out


# --- rules -------------------------------------------------------------------

Step = tuple[Label, T.Term, AnyContext]


def _action(t: T.Prefix, ctx: Context, program: Program) -> list[Step]:
    a, body = t.action, t.body
    match a:
        case T.EmitValue(gate, value):
            return [(Emit(gate, value), body, ctx)]
        case T.EmitVar(gate, var):
            if ctx.type_of(var) is not VarType.NAT or var not in ctx.store:
                return []
            return [(Emit(gate, ctx.store[var]), body, ctx)]
        case T.Receive(gate, var):
            vt = ctx.type_of(var)
            if vt is None or (vt is VarType.QUBIT and var in ctx.qseq):
                return []
            return [(Receive(gate, var), body, ctx)]
        case T.ApplyUnitary(name, targets):
            pos = _positions(ctx, targets)
            if pos is None:
                return []
            state = quantum.apply_unitary(ctx.state, pos, program.unitaries[name])
            return [(TAU, body, replace(ctx, state=state))]
        case T.MeasureOnly(name, targets):
            pos = _positions(ctx, targets)
            if pos is None:
                return []
            branches = quantum.measure(ctx.state, pos, program.observables[name])
            mixed = ProbContext(
                tuple(
                    ProbBranch(b.probability, replace(ctx, state=b.state), (name, b.eigenvalue))
                    for b in branches
                )
            )
            return [(TAU, body, mixed)]
        case T.EmitMeasure(gate, name, targets):
            pos = _positions(ctx, targets)
            if pos is None:
                return []
            y, ctx1 = ctx.next_name("y")
            declared = C.declare(ctx1, [y])
            out = []
            for b in quantum.measure(ctx.state, pos, program.observables[name]):
                branch_ctx = replace(declared, state=b.state, store={**declared.store, y: b.eigenvalue})
                out.append(ProbBranch(b.probability, branch_ctx, (name, b.eigenvalue)))
            cont = T.Seq(T.Block(T.Prefix(T.EmitVar(gate, y), T.END)), body)
            return [(TAU, cont, ProbContext(tuple(out)))]
    raise TypeError(a)


def _lift(ctx2: AnyContext, base, other, side) -> AnyContext:
    if isinstance(ctx2, ProbContext):
        return ctx2.map(lambda c: C.rebase(base, other, side, c))
    return C.rebase(base, other, side, ctx2)


def _communicate(ctx: Context, base, seg_p, seg_q, value: int, receiver: Context, var: str):
    """Context after ``value`` is received into ``var``; None if the rule does not apply."""
    shared = replace(ctx, stack=base + (C.Fork(seg_p, seg_q),))
    vt = receiver.type_of(var)
    if vt is VarType.NAT:
        return replace(shared, store={**ctx.store, var: value})
    if value not in (0, 1) or var in ctx.qseq:
        return None
    return replace(shared, qseq=(var,) + ctx.qseq, state=quantum.init_qubit(ctx.state, value))


def _par(t: T.Par, ctx: Context, program: Program) -> list[Step]:
    if t.forked:
        base, top = ctx.stack[:-1], ctx.stack[-1]
        if not isinstance(top, C.Fork):
            raise C.ContextError("running parallel composition lost its fork")
    else:
        base, top = ctx.stack, C.Fork()
    view_p = replace(ctx, stack=base + top.left)
    view_q = replace(ctx, stack=base + top.right)
    steps_p = _step(t.left, view_p, program)
    steps_q = _step(t.right, view_q, program)
    n = len(base)
    out: list[Step] = []
    for label, p2, c2 in steps_p:
        if label != DELTA:
            out.append((label, T.Par(p2, t.right, True), _lift(c2, base, top.right, "left")))
    for label, q2, c2 in steps_q:
        if label != DELTA:
            out.append((label, T.Par(t.left, q2, True), _lift(c2, base, top.left, "right")))
    for lp, p2, cp in steps_p:
        for lq, q2, cq in steps_q:
            if isinstance(lp, Emit) and isinstance(lq, Receive) and lp.gate == lq.gate:
                new = _communicate(ctx, base, cp.stack[n:], cq.stack[n:], lp.value, cq, lq.var)
            elif isinstance(lp, Receive) and isinstance(lq, Emit) and lp.gate == lq.gate:
                new = _communicate(ctx, base, cp.stack[n:], cq.stack[n:], lq.value, cp, lp.var)
            else:
                continue
            if new is not None:
                out.append((TAU, T.Par(p2, q2, True), new))
    if any(lab == DELTA for lab, _, _ in steps_p) and any(lab == DELTA for lab, _, _ in steps_q):
        out.append((DELTA, T.NIL, C.join(replace(ctx, stack=base + (top,)))))
    return out


def _step(t: T.Term, ctx: Context, program: Program) -> list[Step]:
    match t:
        case T.Nil():
            return []
        case T.End():
            return [(DELTA, T.NIL, ctx)]
        case T.Invoke():
            body, ctx = unfold(t, program, ctx)
            return _step(body, ctx, program)
        case T.Scope(classical, quantum_vars, body):
            return [(DECL, T.Block(body), C.declare(ctx, classical, quantum_vars))]
        case T.Block(body):
            out = []
            for label, b2, c2 in _step(body, ctx, program):
                if label == DELTA:
                    out.append((DELTA, T.NIL, C.release_scope(c2)))
                else:
                    out.append((label, T.Block(b2), c2))
            return out
        case T.Restrict(body, gates):
            return [
                (label, T.Restrict(b2, gates), c2)
                for label, b2, c2 in _step(body, ctx, program)
                if not (is_open(label) and label.gate in gates)
            ]
        case T.Seq(left, right):
            out = []
            for label, l2, c2 in _step(left, ctx, program):
                if label == DELTA:
                    out.append((TAU, right, c2))
                else:
                    out.append((label, T.Seq(l2, right), c2))
            return out
        case T.Choice(branches):
            out = []
            for cond, p in branches:
                try:
                    enabled = eval_cond(cond, ctx.store)
                except EvaluationError:
                    enabled = False
                if enabled:
                    out.extend(_step(p, ctx, program))
            return out
        case T.Prefix():
            return _action(t, ctx, program)
        case T.Par():
            return _par(t, ctx, program)
    raise TypeError(f"not a process term: {t!r}")


def transitions(state: ExecState, program: Program) -> list[tuple[Label, ExecState]]:
    """All outgoing ``(label, successor)`` pairs of ``state``."""
    if isinstance(state.ctx, ProbContext):
        return [
            (
                Prob(b.probability, *(b.outcome or (None, None))),
                ExecState(state.term, b.context),
            )
            for b in state.ctx.branches
        ]
    term, ctx = _activate(state.term, state.ctx, program)
    return [(label, ExecState(t2, c2)) for label, t2, c2 in _step(term, ctx, program)]


__all__ = [
    "DECL",
    "DELTA",
    "TAU",
    "Decl",
    "Delta",
    "Emit",
    "EvaluationError",
    "ExecState",
    "Label",
    "Prob",
    "Receive",
    "RecursionLimitError",
    "Tau",
    "eval_cond",
    "format_label",
    "initial_state",
    "is_open",
    "is_stable",
    "transitions",
    "unfold",
]
