import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qproc import context as C
from qproc.terms import VarType

S = 1 / math.sqrt(2)


def test_declare_classical():
    ctx = C.declare(C.Context(), ["k"], [])
    assert ctx.stack == (C.Frame((("k", VarType.NAT),)),)
    assert ctx.store == {}
    assert ctx.type_of("k") is VarType.NAT


def test_declared_qubits_not_initialised():
    ctx = C.declare(C.Context(), [], ["x", "y"])
    assert ctx.type_of("x") is VarType.QUBIT and ctx.type_of("y") is VarType.QUBIT
    assert ctx.qseq == ()


def test_release_stars_qubit_and_keeps_state():
    ctx = C.init_qubit_var(C.declare(C.Context(), [], ["x"]), "x", 1)
    before = ctx.state.copy()
    out = C.release_scope(ctx)
    assert out.qseq == (None,)
    assert np.array_equal(out.state, before)
    assert out.stack == ()


def test_release_drops_classical():
    ctx = C.set_classical(C.declare(C.Context(), ["k"]), "k", 3)
    assert C.release_scope(ctx).store == {}


def test_release_uninitialised_qubit_leaves_qseq():
    base = C.init_qubit_var(C.declare(C.Context(), [], ["b"]), "b", 0)
    out = C.release_scope(C.declare(base, [], ["a"]))
    assert out.qseq == ("b",)


def test_release_without_frame_fails():
    with pytest.raises(C.ContextError):
        C.release_scope(C.Context())
    with pytest.raises(C.ContextError):
        C.release_scope(C.fork(C.declare(C.Context(), ["k"])))


def test_fork_views():
    base = C.declare(C.Context(), ["k"])
    forked = C.fork(base)
    assert C.view(forked, "left").vars() == base.vars()
    left = C.declare(C.view(forked, "left"), [], ["x"])
    ctx = C.rebase(base.stack, (), "left", left)
    assert "x" in C.view(ctx, "left").vars()
    assert "x" not in C.view(ctx, "right").vars()


def test_operand_cannot_touch_shared_stack():
    base = C.declare(C.Context(), ["k"])
    popped = C.release_scope(C.view(C.fork(base), "left"))
    with pytest.raises(C.ContextError):
        C.rebase(base.stack, (), "left", popped)


def test_join_frees_both_branches():
    base = C.declare(C.Context(), ["k"])
    base = C.set_classical(base, "k", 4)
    left = C.init_qubit_var(C.declare(C.view(C.fork(base), "left"), [], ["x"]), "x", 0)
    ctx = C.rebase(base.stack, (), "left", left)
    right = C.init_qubit_var(C.declare(C.view(ctx, "right"), ["j"], ["y"]), "y", 1)
    right = C.set_classical(right, "j", 2)
    ctx = C.rebase(base.stack, ctx.stack[-1].left, "right", right)
    out = C.join(ctx)
    assert out.qseq == (None, None)
    assert out.store == {"k": 4}
    assert out.stack == base.stack
    assert np.array_equal(out.state, ctx.state)


def test_join_empty_fork_is_identity():
    base = C.set_classical(C.declare(C.Context(), ["k"]), "k", 1)
    out = C.join(C.fork(base))
    assert out.qseq == base.qseq and out.store == base.store and out.stack == base.stack


def test_join_requires_fork():
    with pytest.raises(C.ContextError):
        C.join(C.declare(C.Context(), ["k"]))


def test_set_and_get():
    ctx = C.declare(C.Context(), ["k"], ["x"])
    ctx = C.set_classical(ctx, "k", 5)
    assert C.get_value(ctx, "k") == 5
    ctx = C.set_classical(ctx, "k", 6)
    assert C.get_value(ctx, "k") == 6


def test_set_get_errors():
    ctx = C.declare(C.Context(), ["k"], ["x"])
    with pytest.raises(C.ContextError, match="unset"):
        C.get_value(ctx, "k")
    with pytest.raises(C.ContextError, match="undeclared"):
        C.set_classical(ctx, "j", 1)
    with pytest.raises(C.ContextError, match="Nat"):
        C.set_classical(ctx, "x", 1)
    with pytest.raises(C.ContextError):
        C.set_classical(ctx, "k", -1)


def test_no_double_initialisation():
    ctx = C.init_qubit_var(C.declare(C.Context(), [], ["x"]), "x", 0)
    with pytest.raises(C.ContextError, match="already"):
        C.init_qubit_var(ctx, "x", 1)


def test_new_qubit_is_prepended():
    ctx = C.declare(C.Context(), [], ["x", "y"])
    ctx = C.init_qubit_var(ctx, "x", 1)
    ctx = C.init_qubit_var(ctx, "y", 0)
    assert ctx.qseq == ("y", "x")
    assert np.allclose(ctx.state, [0, 1, 0, 0])


def test_prob_context_checks_sum():
    c = C.Context()
    with pytest.raises(C.ContextError):
        C.ProbContext((C.ProbBranch(0.5, c), C.ProbBranch(0.4, c)))
    pc = C.ProbContext((C.ProbBranch(0.5, c), C.ProbBranch(0.5, c)))
    assert not C.is_stable(pc)
    assert C.is_stable(c)


def test_single_certain_branch_collapses():
    c = C.declare(C.Context(), ["k"])
    mixed = C.mix([(1.0, c)])
    assert mixed is c and C.is_stable(mixed)
    assert not C.is_stable(C.mix([(0.5, c), (0.5, c)]))


# --- invariants under random operation sequences -----------------------------

OPS = ["declare", "release", "fork", "left", "right", "join", "init", "set"]


def _check(ctx):
    assert len(ctx.qseq) == int(np.log2(ctx.state.shape[0]))
    classical = {n for n, t in C.iter_bindings(ctx.stack) if t is VarType.NAT}
    assert set(ctx.store) <= classical
    assert abs(np.linalg.norm(ctx.state) - 1) < 1e-12


def _freed(ctx):
    # counted from the tail, since new qubits are prepended
    return {len(ctx.qseq) - i for i, n in enumerate(ctx.qseq) if n is None}


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(OPS), st.integers(0, 1)), max_size=40))
def test_stack_invariants(ops):
    """Random well-formed walks keep width, store domain and starred slots consistent."""
    ctx = C.Context()
    counter = 0
    for op, bit in ops:
        prev_starred = _freed(ctx)
        if op == "declare":
            counter += 1
            ctx = C.declare(ctx, [f"k{counter}"], [f"q{counter}"])
        elif op == "release" and ctx.stack and isinstance(ctx.stack[-1], C.Frame):
            ctx = C.release_scope(ctx)
        elif op == "fork":
            ctx = C.fork(ctx)
        elif op in ("left", "right") and ctx.stack and isinstance(ctx.stack[-1], C.Fork):
            # one step of an operand: declare something in its segment
            top = ctx.stack[-1]
            counter += 1
            v = C.declare(C.view(ctx, op), [f"k{counter}"], [f"q{counter}"])
            v = C.init_qubit_var(v, f"q{counter}", bit)
            other = top.right if op == "left" else top.left
            ctx = C.rebase(ctx.stack[:-1], other, op, v)
        elif op == "join" and ctx.stack and isinstance(ctx.stack[-1], C.Fork):
            ctx = C.join(ctx)
        elif op == "init":
            free = [n for n, t in C.iter_bindings(ctx.stack) if t is VarType.QUBIT and n not in ctx.qseq]
            if free:
                ctx = C.init_qubit_var(ctx, free[0], bit)
        elif op == "set":
            names = [n for n, t in C.iter_bindings(ctx.stack) if t is VarType.NAT]
            if names:
                ctx = C.set_classical(ctx, names[0], bit + 7)
        _check(ctx)
        assert prev_starred <= _freed(ctx)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from(["a", "b", "c"]), max_size=3, unique=True),
    st.lists(st.sampled_from(["p", "q"]), max_size=2, unique=True),
    st.integers(0, 9),
)
def test_release_after_declare_restores(classical, quantum_vars, value):
    base = C.set_classical(C.declare(C.Context(), ["z"]), "z", value)
    ctx = C.declare(base, classical, quantum_vars)
    for n in classical:
        ctx = C.set_classical(ctx, n, value + 1)
    out = C.release_scope(ctx)
    assert out.vars() == base.vars()
    assert out.store == base.store
    assert out.qseq == base.qseq
