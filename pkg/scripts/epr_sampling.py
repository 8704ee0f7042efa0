"""Compare sampled CheckEPR outcome frequencies with the exact distribution."""

import argparse
import math
from collections import Counter
from pathlib import Path

from qproc.explorer import outcome_distribution, sample_trace
from qproc.program import load_program
from qproc.semantics import initial_state

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("program", nargs="?", default=str(ROOT / "programs" / "check_epr1.qp"))
    ap.add_argument("-n", type=int, default=20_000)
    ap.add_argument("--policy", choices=["first", "uniform"], default="uniform")
    args = ap.parse_args()

    prog = load_program(Path(args.program).read_text())
    exact = outcome_distribution(initial_state(prog), prog, args.policy).values_only()
    counts = Counter(
        tuple(v for _, v in sample_trace(initial_state(prog), prog, args.policy, seed).outcomes)
        for seed in range(args.n)
    )
    bound = 3 / math.sqrt(args.n)
    print(f"{'outcome':10} {'exact':>8} {'sampled':>8}   (bound {bound:.4f})")
    for key in sorted(set(exact) | set(counts)):
        freq = counts[key] / args.n
        flag = "" if abs(freq - exact.get(key, 0.0)) <= bound else "  <-- outside bound"
        print(f"{str(key):10} {exact.get(key, 0.0):8.4f} {freq:8.4f}{flag}")


if __name__ == "__main__":
    main()
