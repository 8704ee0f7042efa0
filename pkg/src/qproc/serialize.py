"""JSON, JSON-lines and DOT renderings of states, traces, trees and distributions.

Output is canonical: keys sorted, no timestamps, floats via ``repr``.
"""

from __future__ import annotations

import json

from .context import Context, ProbContext
from .explorer import Distribution, ExecutionTree, Trace
from .printer import pretty_print
from .semantics import ExecState, Label, Prob, format_label


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _plain(ctx: Context, verbose: bool) -> dict:
    out = {
        "qseq": ["*" if n is None else n for n in ctx.qseq],
        "store": dict(sorted(ctx.store.items())),
    }
    if verbose:
        out["amplitudes"] = [[float(a.real), float(a.imag)] for a in ctx.state]
    return out


def context_json(ctx, verbose: bool = False) -> dict:
    if isinstance(ctx, ProbContext):
        branches = []
        for b in ctx.branches:
            entry = {"prob": b.probability, **_plain(b.context, verbose)}
            if b.outcome is not None:
                entry["outcome"] = list(b.outcome)
            branches.append(entry)
        return {"qseq": None, "store": None, "branches": branches}
    return _plain(ctx, verbose)


def step_json(label: Label | None, state: ExecState, verbose: bool = False) -> dict:
    return {
        "label": None if label is None else format_label(label),
        "prob": label.p if isinstance(label, Prob) else None,
        "term": pretty_print(state.term),
        **context_json(state.ctx, verbose),
    }


def trace_jsonl(trace: Trace, verbose: bool = False) -> str:
    lines = [_dumps(step_json(s.label, s.state, verbose)) for s in trace.steps]
    lines.append(_dumps({"status": trace.status, "steps": len(trace.steps) - 1}))
    return "\n".join(lines) + "\n"


def trace_text(trace: Trace) -> str:
    lines = [f"   {pretty_print(trace.steps[0].state.term)}"]
    for s in trace.steps[1:]:
        lines.append(f"-- {format_label(s.label)} --> {pretty_print(s.state.term)}")
    lines.append(f"[{trace.status}]")
    return "\n".join(lines) + "\n"


def tree_json(tree: ExecutionTree, verbose: bool = False) -> str:
    nodes = []
    edges = []
    for n in tree.nodes:
        nodes.append(
            {
                "id": n.id,
                "depth": n.depth,
                "status": n.status,
                "term": pretty_print(n.state.term),
                **context_json(n.state.ctx, verbose),
            }
        )
        for label, child in n.edges:
            edges.append(
                {
                    "from": n.id,
                    "to": child,
                    "label": format_label(label),
                    "prob": label.p if isinstance(label, Prob) else None,
                }
            )
    return _dumps({"nodes": nodes, "edges": edges, "truncated": tree.truncated}) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def tree_dot(tree: ExecutionTree) -> str:
    lines = ["digraph execution {", "  node [shape=box, fontname=monospace];"]
    for n in tree.nodes:
        attrs = f'label="{_dot_escape(pretty_print(n.state.term))}"'
        if n.status == "truncated":
            attrs += ", style=dashed"
        elif n.status == "terminated":
            attrs += ", peripheries=2"
        elif n.status == "stuck":
            attrs += ", color=red"
        lines.append(f"  n{n.id} [{attrs}];")
    for n in tree.nodes:
        for label, child in n.edges:
            style = ", style=dotted" if isinstance(label, Prob) else ""
            lines.append(f'  n{n.id} -> n{child} [label="{_dot_escape(format_label(label))}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _outcome_text(key) -> str:
    return ", ".join(f"{obs}={val}" for obs, val in key) if key else "(no measurement)"


def distribution_text(dist: Distribution) -> str:
    rows = sorted(dist.probabilities.items())
    width = max((len(_outcome_text(k)) for k, _ in rows), default=0)
    lines = [f"{_outcome_text(k).ljust(width)}  {p:.12g}" for k, p in rows]
    for status, p in sorted(dist.status.items()):
        if status != "terminated":
            lines.append(f"[{status}]  {p:.12g}")
    return "\n".join(lines) + "\n"


def distribution_json(dist: Distribution) -> str:
    rows = [
        {"outcome": [list(o) for o in key], "prob": float(f"{p:.12g}")}
        for key, p in sorted(dist.probabilities.items())
    ]
    status = {k: float(f"{v:.12g}") for k, v in dist.status.items()}
    return _dumps({"outcomes": rows, "status": status}) + "\n"
