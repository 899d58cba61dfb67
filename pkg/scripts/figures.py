"""Regenerate the signature-length and preshared-key curves.

    python3 scripts/figures.py --out-dir figures

Writes ``sweep.csv``; when matplotlib is installed it also writes
``ell_S.png`` and ``ell_P.png`` (log-x axes over b_M = 1e2..1e10).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from qdsig.optimizer import DEFAULT_TARGET, SWEEP_GRID, rows_to_csv, sweep

LABELS = {"p1": "Protocol 1", "p2": "Protocol 2", "p3": "Protocol 3"}


def plot(rows: list[dict], out_dir: Path) -> list[Path]:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; CSV only", file=sys.stderr)
        return []
    written = []
    for column, ylabel in (("ell_S", "signature length (bits)"), ("ell_P", "preshared bits per receiver")):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for proto, label in LABELS.items():
            pts = [(int(r["b_M"]), int(r[column])) for r in rows if r["protocol"] == proto and r[column] != ""]
            if pts:
                xs, ys = zip(*pts)
                ax.plot(xs, ys, marker="o", label=label)
        ax.set_xscale("log")
        if column == "ell_P":
            ax.set_yscale("log")
        ax.set_xlabel("document length b_M (bits)")
        ax.set_ylabel(ylabel)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{column}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--eps", type=float, default=DEFAULT_TARGET)
    ap.add_argument("--from-csv", help="plot an existing sweep CSV instead of recomputing")
    args = ap.parse_args(argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.from_csv:
        with open(args.from_csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    else:
        rows, errors = sweep(("p1", "p2", "p3"), SWEEP_GRID, args.eps)
        for err in errors:
            print(err, file=sys.stderr)
        (out_dir / "sweep.csv").write_text(rows_to_csv(rows))
    for path in plot(rows, out_dir):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
