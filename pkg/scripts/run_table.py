"""Run one of the table presets and print acceptance and ESJD per ell.

Usage:
    python3 scripts/run_table.py table2 --steps 100000 --replicas 4 --out results
"""
import argparse
import logging

from scaling_lab.experiments import run_sweep_experiment, spec_with, table_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("table", choices=("table1", "table2", "table3"))
    ap.add_argument("--steps", type=int, help="post-burn-in steps per chain")
    ap.add_argument("--replicas", type=int, default=1)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--env-seed", type=int, help="environment seed (table1 only)")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = table_spec(args.table)
    chain = {"steps": args.steps} if args.steps else {}
    target = {"env_seed": args.env_seed} if args.env_seed is not None else {}
    spec = spec_with(spec, chain=chain, target=target, sweep={"replicas": args.replicas},
                     output={"out_dir": args.out})
    res = run_sweep_experiment(spec, workers=args.workers)
    print(f"{'ell':>6} {'acceptance':>11} {'se':>8} {'esjd_coord':>12} {'esjd_full':>12}")
    for i, ell in enumerate(res.ell_list):
        print(f"{ell:6.3g} {res.mean_acceptance[i]:11.4f} {res.se_acceptance[i]:8.4f} "
              f"{res.mean_esjd_coord[i]:12.4e} {res.mean_esjd_full[i]:12.4e}")
    print(f"ESJD argmax at ell={res.argmax_ell:g}; files in {args.out}/")


if __name__ == "__main__":
    main()
