"""Execution trees, sampled runs and exact outcome distributions."""

from __future__ import annotations

import enum
import math
import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .context import Context, ProbContext, is_stable
from .program import Program
from .semantics import Delta, ExecState, Label, Prob, is_open, transitions
from .terms import base_name

SEPARABILITY_TOL = 1e-8


class Policy(str, enum.Enum):
    FIRST = "first"
    UNIFORM = "uniform"


class Status(str, enum.Enum):
    TERMINATED = "terminated"
    STUCK = "stuck"
    TRUNCATED = "truncated"


class OpenActionError(RuntimeError):
    """A closed run reached a state offering a visible emit or receive."""

    def __init__(self, label: Label, state: ExecState):
        from .semantics import format_label

        super().__init__(f"open action {format_label(label)} in closed run")
        self.label = label
        self.state = state


class TruncatedError(RuntimeError):
    pass


class NotSeparableError(ValueError):
    pass


# --- trees -------------------------------------------------------------------


@dataclass
class TreeNode:
    id: int
    state: ExecState
    depth: int
    incoming: Label | None = None
    edges: list[tuple[Label, int]] = field(default_factory=list)
    truncated: bool = False

    @property
    def status(self) -> str:
        if self.truncated:
            return Status.TRUNCATED.value
        if self.edges:
            return "internal"
        if isinstance(self.incoming, Delta):
            return Status.TERMINATED.value
        return Status.STUCK.value


@dataclass
class ExecutionTree:
    nodes: list[TreeNode]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    @property
    def truncated(self) -> bool:
        return any(n.truncated for n in self.nodes)

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes if not n.edges]


def build_tree(init: ExecState, program: Program, max_depth: int = 1000, max_nodes: int = 100_000) -> ExecutionTree:
    """Breadth-first expansion; nodes cut off by a limit are marked truncated."""
    if max_depth < 1 or max_nodes < 1:
        raise ValueError("limits must be positive")
    root = TreeNode(0, init, 0)
    nodes = [root]
    queue = deque([root])
    while queue:
        node = queue.popleft()
        succ = transitions(node.state, program)
        if not succ:
            continue
        if node.depth >= max_depth:
            node.truncated = True
            continue
        for label, st in succ:
            if len(nodes) >= max_nodes:
                node.truncated = True
                break
            child = TreeNode(len(nodes), st, node.depth + 1, label)
            nodes.append(child)
            node.edges.append((label, child.id))
            queue.append(child)
    return ExecutionTree(nodes)


# --- traces ------------------------------------------------------------------


@dataclass
class TraceStep:
    label: Label | None
    state: ExecState


@dataclass
class Trace:
    steps: list[TraceStep]
    status: str

    @property
    def final(self) -> ExecState:
        return self.steps[-1].state

    @property
    def outcomes(self) -> tuple[tuple[str, int], ...]:
        return tuple(
            s.label.outcome
            for s in self.steps
            if isinstance(s.label, Prob) and s.label.outcome is not None
        )


def _leaf_status(last: Label | None) -> str:
    return Status.TERMINATED.value if isinstance(last, Delta) else Status.STUCK.value


def _check_closed(succ, state):
    for label, _ in succ:
        if is_open(label):
            raise OpenActionError(label, state)


def sample_trace(
    init: ExecState,
    program: Program,
    policy: Policy | str = Policy.FIRST,
    seed: int = 0,
    max_steps: int = 10_000,
    open_mode: bool = False,
) -> Trace:
    """One run: probabilistic branches drawn by weight, the rest by ``policy``."""
    policy = Policy(policy)
    rng = random.Random(seed)
    steps = [TraceStep(None, init)]
    state = init
    for _ in range(max_steps):
        succ = transitions(state, program)
        if not open_mode:
            _check_closed(succ, state)
        if not succ:
            return Trace(steps, _leaf_status(steps[-1].label))
        if not is_stable(state.ctx):
            r, acc = rng.random(), 0.0
            choice = succ[-1]
            for label, nxt in succ:
                acc += label.p
                if r < acc:
                    choice = (label, nxt)
                    break
        elif len(succ) == 1 or policy is Policy.FIRST:
            choice = succ[0]
        else:
            choice = succ[rng.randrange(len(succ))]
        label, state = choice
        steps.append(TraceStep(label, state))
    if transitions(state, program):
        return Trace(steps, Status.TRUNCATED.value)
    return Trace(steps, _leaf_status(steps[-1].label))


# --- exact distributions -----------------------------------------------------


@dataclass
class Leaf:
    probability: float
    trace: Trace

    @property
    def outcomes(self) -> tuple[tuple[str, int], ...]:
        return self.trace.outcomes


def resolved_leaves(
    init: ExecState,
    program: Program,
    policy: Policy | str = Policy.FIRST,
    max_depth: int = 1000,
    max_nodes: int = 100_000,
    open_mode: bool = False,
) -> list[Leaf]:
    """Every complete path once nondeterminism is resolved by ``policy``.

    Probabilistic edges multiply the path weight by their probability; under
    the uniform policy a choice among ``n`` successors weighs ``1/n``.
    """
    policy = Policy(policy)
    leaves: list[Leaf] = []
    visited = 0
    stack = [(init, 1.0, (TraceStep(None, init),))]
    while stack:
        state, weight, path = stack.pop()
        visited += 1
        if visited > max_nodes:
            raise TruncatedError(f"exploration exceeded {max_nodes} nodes")
        succ = transitions(state, program)
        if not open_mode:
            _check_closed(succ, state)
        if not succ:
            leaves.append(Leaf(weight, Trace(list(path), _leaf_status(path[-1].label))))
            continue
        if len(path) > max_depth:
            raise TruncatedError(f"path exceeded depth {max_depth}")
        if not is_stable(state.ctx):
            weighted = [(label.p, label, nxt) for label, nxt in succ]
        elif policy is Policy.FIRST:
            weighted = [(1.0, *succ[0])]
        else:
            weighted = [(1.0 / len(succ), label, nxt) for label, nxt in succ]
        # reversed so the leftmost branch is expanded first
        for w, label, nxt in reversed(weighted):
            stack.append((nxt, weight * w, path + (TraceStep(label, nxt),)))
    return leaves


@dataclass
class Distribution:
    """Exact outcome probabilities keyed by the chronological measurement record."""

    probabilities: dict[tuple[tuple[str, int], ...], float]
    status: dict[str, float]

    def values_only(self) -> dict[tuple[int, ...], float]:
        out: dict[tuple[int, ...], float] = {}
        for key, p in self.probabilities.items():
            k = tuple(v for _, v in key)
            out[k] = out.get(k, 0.0) + p
        return out


def outcome_distribution(
    init: ExecState,
    program: Program,
    policy: Policy | str = Policy.FIRST,
    max_depth: int = 1000,
    max_nodes: int = 100_000,
    open_mode: bool = False,
) -> Distribution:
    probs: dict[tuple, list[float]] = {}
    status: dict[str, list[float]] = {}
    for leaf in resolved_leaves(init, program, policy, max_depth, max_nodes, open_mode):
        probs.setdefault(leaf.outcomes, []).append(leaf.probability)
        status.setdefault(leaf.trace.status, []).append(leaf.probability)
    return Distribution(
        {k: math.fsum(v) for k, v in probs.items()},
        {k: math.fsum(v) for k, v in status.items()},
    )


# --- final states ------------------------------------------------------------


def _slot_of(trace: Trace, var: str) -> int:
    for step in reversed(trace.steps):
        ctx = step.state.ctx
        contexts = [b.context for b in ctx.branches] if isinstance(ctx, ProbContext) else [ctx]
        for c in contexts:
            hits = {i for i, n in enumerate(c.qseq) if n is not None and (n == var or base_name(n) == var)}
            if len(hits) > 1:
                raise ValueError(f"qubit name {var!r} is ambiguous")
            if hits:
                return hits.pop()
    raise KeyError(f"qubit {var!r} never appears in the trace")


def reduced_qubit(state: np.ndarray, slot: int, tol: float = SEPARABILITY_TOL) -> np.ndarray:
    """State of one register slot, provided it is a product factor of ``state``.

    The phase is fixed so the largest-magnitude amplitude (the first, on ties)
    is real and positive.
    """
    m = int(state.shape[0]).bit_length() - 1
    tensor = np.moveaxis(state.reshape((2,) * m), slot, 0).reshape(2, -1)
    u, s, _ = np.linalg.svd(tensor, full_matrices=False)
    residual = math.sqrt(float(np.sum(s[1:] ** 2)))
    if residual >= tol:
        raise NotSeparableError(f"qubit is entangled with the rest of the register (residual {residual:.3g})")
    vec = u[:, 0]
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def final_quantum_state(trace: Trace, var: str) -> np.ndarray:
    """Amplitudes of qubit ``var`` at the end of ``trace``, up to global phase.

    ``var`` may be given without renaming suffixes. Its slot is found in the
    latest snapshot where it is still named, since scope exit stars names.
    """
    ctx = trace.final.ctx
    if not isinstance(ctx, Context):
        raise ValueError("trace ends in an unresolved probabilistic context")
    return reduced_qubit(ctx.state, _slot_of(trace, var))
