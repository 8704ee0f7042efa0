"""Command-line front end.

Exit codes::

    0  success (``run``: the trace terminated)
    1  program error: syntax, elaboration, bad definitions file, unknown entry,
       or a run-time evaluation error such as the unfolding depth limit
    2  I/O error or bad command-line usage
    3  ``run``: the trace got stuck
    4  a depth/node/step limit truncated the result
    5  an open emit/receive was reached in a closed run
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from . import quantum
from .errors import QProcError
from .explorer import (
    OpenActionError,
    Policy,
    Status,
    TruncatedError,
    build_tree,
    outcome_distribution,
    sample_trace,
)
from .program import load_program
from .semantics import EvaluationError, RecursionLimitError, initial_state
from .serialize import (
    distribution_json,
    distribution_text,
    trace_jsonl,
    trace_text,
    tree_dot,
    tree_json,
)

EXIT_OK, EXIT_PROGRAM, EXIT_IO, EXIT_STUCK, EXIT_TRUNCATED, EXIT_OPEN = range(6)


@dataclass
class RunConfig:
    source: str
    entry: str = "Main"
    seed: int = 0
    policy: str = "first"
    max_depth: int = 1000
    max_nodes: int = 100_000
    max_steps: int = 10_000
    open_mode: bool = False
    defs: str | None = None
    format: str | None = None
    verbose: bool = False

    def __post_init__(self):
        for name in ("max_depth", "max_nodes", "max_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name.replace('_', '-')} must be positive")
        Policy(self.policy)
        if self.format not in (None, "text", "json", "dot"):
            raise ValueError(f"unknown format {self.format!r}")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(cfg: RunConfig):
    try:
        with open(cfg.source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _Fail(EXIT_IO, f"{cfg.source}: {e.strerror or e}") from None
    unitaries = observables = None
    defs = cfg.defs or os.environ.get("QPROC_DEFS")
    if defs:
        try:
            unitaries, observables = quantum.load_definitions(defs)
        except OSError as e:
            raise _Fail(EXIT_IO, f"{defs}: {e.strerror or e}") from None
        except quantum.QuantumError as e:
            raise _Fail(EXIT_PROGRAM, str(e)) from None
    try:
        program = load_program(text, unitaries, observables)
    except QProcError as e:
        raise _Fail(EXIT_PROGRAM, e.format(cfg.source)) from None
    return program


def _init(cfg: RunConfig, program):
    try:
        return initial_state(program, cfg.entry)
    except KeyError:
        raise _Fail(EXIT_PROGRAM, f"{cfg.source}: no process named {cfg.entry!r}") from None


def cmd_check(cfg: RunConfig, out) -> int:
    program = _load(cfg)
    if cfg.entry not in program.definitions:
        raise _Fail(EXIT_PROGRAM, f"{cfg.source}: no process named {cfg.entry!r}")
    out.write(f"{cfg.source}: ok ({len(program.definitions)} definitions)\n")
    return EXIT_OK


def cmd_run(cfg: RunConfig, out) -> int:
    program = _load(cfg)
    trace = sample_trace(
        _init(cfg, program), program, cfg.policy, cfg.seed, cfg.max_steps, cfg.open_mode
    )
    if (cfg.format or "json") == "text":
        out.write(trace_text(trace))
    else:
        out.write(trace_jsonl(trace, cfg.verbose))
    return {
        Status.TERMINATED.value: EXIT_OK,
        Status.STUCK.value: EXIT_STUCK,
        Status.TRUNCATED.value: EXIT_TRUNCATED,
    }[trace.status]


def cmd_tree(cfg: RunConfig, out) -> int:
    program = _load(cfg)
    tree = build_tree(_init(cfg, program), program, cfg.max_depth, cfg.max_nodes)
    if (cfg.format or "json") == "dot":
        out.write(tree_dot(tree))
    else:
        out.write(tree_json(tree, cfg.verbose))
    return EXIT_TRUNCATED if tree.truncated else EXIT_OK


def cmd_dist(cfg: RunConfig, out) -> int:
    program = _load(cfg)
    dist = outcome_distribution(
        _init(cfg, program), program, cfg.policy, cfg.max_depth, cfg.max_nodes, cfg.open_mode
    )
    if (cfg.format or "text") == "json":
        out.write(distribution_json(dist))
    else:
        out.write(distribution_text(dist))
    return EXIT_OK


COMMANDS = {"check": cmd_check, "run": cmd_run, "tree": cmd_tree, "dist": cmd_dist}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qproc", description="Quantum process algebra interpreter.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("check", "parse and elaborate a program"),
        ("run", "sample one run and print its trace"),
        ("tree", "build the execution tree"),
        ("dist", "exact outcome distribution under a scheduler policy"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("source")
        p.add_argument("--entry", default="Main")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--policy", choices=[x.value for x in Policy], default="first")
        p.add_argument("--max-depth", type=int, default=1000)
        p.add_argument("--max-nodes", type=int, default=100_000)
        p.add_argument("--max-steps", type=int, default=10_000)
        p.add_argument("--open", dest="open_mode", action="store_true")
        p.add_argument("--defs", default=None, help="unitary/observable definitions (or $QPROC_DEFS)")
        p.add_argument("--format", choices=["text", "json", "dot"], default=None)
        p.add_argument("--verbose", action="store_true", help="include state amplitudes")
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        cfg = RunConfig(**opts)
    except ValueError as e:
        err.write(f"qproc: {e}\n")
        return EXIT_IO
    try:
        return COMMANDS[args.command](cfg, out)
    except _Fail as e:
        err.write(f"{e}\n")
        return e.code
    except OpenActionError as e:
        err.write(f"{cfg.source}: {e}\n")
        return EXIT_OPEN
    except TruncatedError as e:
        err.write(f"{cfg.source}: truncated: {e}\n")
        return EXIT_TRUNCATED
    except (EvaluationError, RecursionLimitError) as e:
        err.write(f"{cfg.source}: {e}\n")
        return EXIT_PROGRAM


if __name__ == "__main__":
    sys.exit(main())
