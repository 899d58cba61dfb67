"""Run every Monte-Carlo attack at its reference parameters and print one line each.

    python3 scripts/attack_report.py [--trials 100000] [--seed 1]
"""

from __future__ import annotations

import argparse
import sys

from qdsig import adversary


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    t, s = args.trials, args.seed
    outcomes = [
        adversary.run_lemma3(range(s, s + 100)),
        adversary.mc_forgery_p1(10, 8, t, s),
        adversary.mc_forgery_p1(8, 64, t, s),
        adversary.mc_repudiation_p2(8, 1, t, s),
        adversary.mc_forgery_p3(2, 16, 2, 1, t, s),
        adversary.attack_dispute_p3(2, 16, 2, 1, t, s),
        adversary.attack_transferability_p3(2, 64, 1, None, t, s),
    ]
    for o in outcomes:
        lo, hi = o.cp99
        flag = "ok" if lo <= o.bound else "EXCEEDS"
        print(f"{o.attack:13s} {o.params} rate={o.rate:.5f} cp99=[{lo:.5f}, {hi:.5f}] bound={o.bound:.5g} {flag}")
    for bp in (3, 4):
        r = adversary.wc_exhaustive_substitution(bp, 8)
        print(f"wc-exhaustive b'_H={bp} b_M=8 best={r['best_success']:.4f} eps={r['epsilon']:.4g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
