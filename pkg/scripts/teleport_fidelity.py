"""Teleport random single-qubit states and report branch probabilities and fidelities."""

import argparse
import time
from pathlib import Path

import numpy as np

from qproc import quantum
from qproc.explorer import final_quantum_state, resolved_leaves
from qproc.program import load_program
from qproc.semantics import initial_state

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    source = (ROOT / "programs" / "teleport_prep.qp").read_text()
    rng = np.random.default_rng(args.seed)
    worst_fid, worst_p = 1.0, 0.0
    start = time.perf_counter()
    for _ in range(args.trials):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        alpha, beta = v / np.linalg.norm(v)
        prep = quantum.Unitary("Prep", 1, [[alpha, -np.conj(beta)], [beta, np.conj(alpha)]])
        prog = load_program(source, {"Prep": prep})
        for leaf in resolved_leaves(initial_state(prog), prog):
            z = final_quantum_state(leaf.trace, "b")
            worst_fid = min(worst_fid, abs(np.vdot([alpha, beta], z)) ** 2)
            worst_p = max(worst_p, abs(leaf.probability - 0.25))
    elapsed = time.perf_counter() - start
    print(f"trials               {args.trials}")
    print(f"worst fidelity       {worst_fid:.15f}")
    print(f"max |p - 1/4|        {worst_p:.3e}")
    print(f"elapsed              {elapsed:.2f} s")


if __name__ == "__main__":
    main()
