"""Optimal acceptance against the Hurst index for both samplers.

Writes ``figure1.csv`` and a gnuplot script, and prints a coarse table.
"""
import argparse
from pathlib import Path

from scaling_lab.experiments import emit_table, provenance
from scaling_lab.scaling import figure1_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    rwm, mala = figure1_curve("rwm"), figure1_curve("mala")
    rows = [(r[0], r[1], r[3], m[1], m[3]) for r, m in zip(rwm, mala)]
    plot = ("set xlabel 'H'\nset ylabel 'optimal acceptance'\nset logscale y\n"
            "plot '{data}' using 1:3 with lines title 'rwm', '{data}' using 1:5 with lines title 'mala'\n")
    out = emit_table(rows, ("H", "beta_rwm", "acceptance_rwm", "beta_mala", "acceptance_mala"),
                     Path(args.out) / "figure1.csv", provenance(), plot=plot)
    print(f"{'H':>5} {'rwm':>10} {'mala':>8}")
    for H, _, a, _, m in rows[9::10]:
        print(f"{H:5.2f} {a:10.5f} {m:8.5f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
