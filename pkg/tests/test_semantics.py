import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from qproc import context as C
from qproc import quantum as Q
from qproc import terms as T
from qproc.parser import parse_term
from qproc.program import load_program
from qproc.semantics import (
    DECL,
    DELTA,
    TAU,
    Emit,
    EvaluationError,
    ExecState,
    Prob,
    Receive,
    RecursionLimitError,
    eval_cond,
    initial_state,
    transitions,
    unfold,
)

S = 1 / math.sqrt(2)
EMPTY = load_program("Main = end")


def run_labels(program, state, limit=200):
    """Follow the first successor until no transition is left."""
    labels = []
    for _ in range(limit):
        succ = transitions(state, program)
        if not succ:
            return labels, state
        label, state = succ[0]
        labels.append(label)
    raise AssertionError("did not stop")


def epr_context():
    ctx = C.declare(C.Context(), [], ["x", "y"])
    ctx = C.init_qubit_var(ctx, "y", 0)
    ctx = C.init_qubit_var(ctx, "x", 0)
    state = Q.apply_unitary(ctx.state, [0], Q.builtin_gate("H"))
    state = Q.apply_unitary(state, [0, 1], Q.builtin_gate("CNot"))
    return replace(ctx, state=state)


def test_end_terminates():
    ((label, nxt),) = transitions(ExecState(T.END, C.Context()), EMPTY)
    assert label == DELTA and nxt.term == T.NIL
    assert transitions(nxt, EMPTY) == []


def test_measure_epr_gives_two_branch_mixture():
    ctx = epr_context()
    term = T.Prefix(T.MeasureOnly("M_std", ("x",)), T.END)
    ((label, nxt),) = transitions(ExecState(term, ctx), EMPTY)
    assert label == TAU and nxt.term == T.END
    assert isinstance(nxt.ctx, C.ProbContext)
    probs = [b.probability for b in nxt.ctx.branches]
    assert probs == pytest.approx([0.5, 0.5], abs=1e-12)
    assert np.allclose(nxt.ctx.branches[0].context.state, [1, 0, 0, 0])
    assert np.allclose(nxt.ctx.branches[1].context.state, [0, 0, 0, 1])


def test_unstable_context_only_resolves():
    c1 = C.set_classical(C.declare(C.Context(), ["k"]), "k", 0)
    c2 = C.set_classical(C.declare(C.Context(), ["k"]), "k", 1)
    mixed = C.ProbContext((C.ProbBranch(0.5, c1), C.ProbBranch(0.5, c2)))
    succ = transitions(ExecState(T.END, mixed), EMPTY)
    assert [l for l, _ in succ] == [Prob(0.5), Prob(0.5)]
    assert succ[0][1].ctx is c1 and succ[1][1].ctx is c2
    assert all(s.term == T.END for _, s in succ)


def test_restricted_communication_is_single_tau():
    prog = load_program("Main = [nat[x]: (g!0 . end || g?x . end) |{g}]")
    (_, inside), = transitions(initial_state(prog), prog)
    succ = transitions(inside, prog)
    assert [l for l, _ in succ] == [TAU]
    assert succ[0][1].ctx.store == {"x~1": 0}


def test_unrestricted_parallel_offers_interleavings_and_sync():
    prog = load_program("Main = [nat[x]: g!2 . end || g?x . end]")
    (_, inside), = transitions(initial_state(prog), prog)
    labels = [l for l, _ in transitions(inside, prog)]
    assert labels == [Emit("g", 2), Receive("g", "x~1"), TAU]


def test_communication_stores_value():
    prog = load_program("Main = [nat[k]: (c?k . ([] k = 7 -> d!k . end)) || c!7 . end]")
    (_, s), = transitions(initial_state(prog), prog)
    comm = [st for l, st in transitions(s, prog) if l == TAU]
    assert len(comm) == 1
    assert C.get_value(comm[0].ctx, "k~1") == 7
    labels = [l for l, _ in transitions(comm[0], prog)]
    assert Emit("d", 7) in labels


def test_receive_into_initialised_qubit_blocked():
    prog = load_program(Path("programs/no_cloning.qp").read_text())
    labels, final = run_labels(prog, initial_state(prog))
    assert labels == [DECL, TAU]
    assert final.ctx.qseq == ("x~1",)
    # both the second receive and the pending emit are still there
    par = final.term.body.body
    assert par.left.action == T.Receive("c", "x~1")
    assert par.right.action == T.EmitValue("c", 1)


def test_qubit_receives_only_bits():
    prog = load_program("Main = [qubit[x]: (c?x . end || c!2 . end) |{c}]")
    (_, s), = transitions(initial_state(prog), prog)
    assert transitions(s, prog) == []


def test_scope_exit_stars_and_drops():
    prog = load_program(Path("programs/scope_exit.qp").read_text())
    labels, final = run_labels(prog, initial_state(prog))
    assert labels[-1] == DELTA
    assert final.term == T.NIL
    assert final.ctx.qseq == (None,)
    assert final.ctx.store == {}


def test_sequence_turns_delta_into_tau():
    prog = load_program("Main = end ; a!1 . end")
    succ = transitions(initial_state(prog), prog)
    assert [l for l, _ in succ] == [TAU]
    assert succ[0][1].term == parse_term("a!1 . end")


def test_parallel_delta_needs_both():
    prog = load_program("Main = end || a!1 . end")
    labels = [l for l, _ in transitions(initial_state(prog), prog)]
    assert labels == [Emit("a", 1)]
    prog = load_program("Main = end || end")
    succ = transitions(initial_state(prog), prog)
    assert [l for l, _ in succ] == [DELTA]


def test_parallel_join_frees_operand_qubits():
    prog = load_program(
        "Main = ([qubit[x]: c?x . end] || [qubit[y]: d?y . end] || c!0 . d!1 . end) |{c,d}"
    )
    labels, final = run_labels(prog, initial_state(prog))
    assert labels[-1] == DELTA
    assert final.ctx.qseq == (None, None)
    assert final.ctx.stack == ()


def reachable(prog, state):
    seen, todo, edges = {state.key()}, [state], []
    while todo:
        s = todo.pop()
        for label, n in transitions(s, prog):
            edges.append(label)
            if n.key() not in seen:
                seen.add(n.key())
                todo.append(n)
    return seen, edges


def test_sibling_classical_survives_scope_exit():
    # j's block exits while k (declared by the sibling) holds 4; k must survive
    src = (
        "Main = [nat[z]: (([nat[j]: c?j . end] ; g!0 . end)"
        " || [nat[k]: d?k . g?z . ([] k = 4 -> f!k . end)]"
        " || d!4 . c!1 . end) |{c,d,g}]"
    )
    prog = load_program(src)
    _, labels = reachable(prog, initial_state(prog))
    assert Emit("f", 4) in labels


def test_choice_nondeterminism_and_stuck():
    prog = load_program("Main = [nat[k]: (c?k . ([] k <= 1 -> a!0 . end [] k = 1 -> b!1 . end)) || c!1 . end]")
    (_, s), = transitions(initial_state(prog), prog)
    comm = [st for l, st in transitions(s, prog) if l == TAU][0]
    labels = [l for l, _ in transitions(comm, prog)]
    assert labels == [Emit("a", 0), Emit("b", 1)]
    prog = load_program(Path("programs/stuck_choice.qp").read_text())
    labels, final = run_labels(prog, initial_state(prog))
    assert labels == [DECL, TAU]
    assert final.ctx.store == {"k~1": 5}


def test_emit_measure_sends_outcome():
    prog = load_program(Path("programs/coin.qp").read_text())
    tree_labels = set()
    frontier = [initial_state(prog)]
    leaves = []
    while frontier:
        s = frontier.pop()
        succ = transitions(s, prog)
        if not succ:
            leaves.append(s)
        for l, n in succ:
            tree_labels.add(type(l).__name__)
            frontier.append(n)
    assert "Prob" in tree_labels
    assert not {"Emit", "Receive"} & tree_labels
    assert all(s.term in (T.NIL, T.Restrict(T.NIL, ("toss",))) for s in leaves)


def test_open_receive_offered_at_top_level():
    prog = load_program("Main = [nat[k]: c?k . end]")
    (_, s), = transitions(initial_state(prog), prog)
    ((label, nxt),) = transitions(s, prog)
    assert label == Receive("c", "k~1")
    assert "k~1" not in nxt.ctx.store


# --- conditions and unfolding ------------------------------------------------


def test_eval_cond_examples():
    assert eval_cond(T.Cond("k", "=", 0), {"k": 0})
    assert not eval_cond(T.Cond(3, "<=", 2), {})
    with pytest.raises(EvaluationError, match="unset"):
        eval_cond(T.Cond("k", "<", "j"), {"j": 1})


@pytest.mark.parametrize("op,expected", [("=", False), ("!=", True), ("<=", True), (">=", False), ("<", True), (">", False)])
def test_all_comparators(op, expected):
    assert eval_cond(T.Cond("a", op, "b"), {"a": 1, "b": 2}) is expected


def test_unfold_binds_arguments_and_drops_declaration():
    prog = load_program(Path("programs/check_epr1.qp").read_text())
    body, ctx = unfold(T.Invoke("BuildEPR", ("a", "b")), prog, C.Context())
    assert isinstance(body, T.Restrict)
    assert "g1?a . g2?b . H[a] . CNot[a,b] . end" in __import__("qproc").pretty_print(body)
    assert ctx.fresh == 0


def test_unfold_partial_binding_keeps_rest_declared():
    prog = load_program("P = [qubit[x,y]: c?y . H[x] . end]\nMain = [qubit[a]: P[a]]")
    body, ctx = unfold(T.Invoke("P", ("a",)), prog, C.Context())
    assert isinstance(body, T.Scope) and body.quantum == ("y~1",)
    assert body.body.body.action.targets == ("a",)
    assert ctx.fresh == 1


def test_unfold_zero_args_is_body_with_fresh_names():
    prog = load_program("Main = [nat[k]: c?k . end]")
    body, _ = unfold(T.Invoke("Main"), prog, C.Context())
    assert body == T.rename(prog.body("Main"), {"k#1": "k~1"})
    prog = load_program("Main = a!0 . end")
    body, _ = unfold(T.Invoke("Main"), prog, C.Context())
    assert body == prog.body("Main")


def test_recursion_limit():
    prog = load_program("P = Q ; end\nQ = P\nMain = P")
    with pytest.raises(RecursionLimitError):
        transitions(initial_state(prog), prog)


def test_guarded_recursion_unfolds_lazily():
    prog = load_program("Main = a!0 . Main")
    state = initial_state(prog)
    for _ in range(300):
        ((label, state),) = transitions(state, prog)
        assert label == Emit("a", 0)
