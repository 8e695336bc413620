"""Command-line entry point ``scaling-lab``.

Subcommands: fbm, solve, figure1, run, sweep, table1, table2, table3, checks.
Flags given on the command line override the values of a ``--spec`` file or
table preset.  Exit status is 0 on success, 1 on failed checks and 2 on
usage or input errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import TARGET_KINDS, ExperimentSpec, SpecError
from .experiments import (emit_table, provenance, run_experiment, run_sweep_experiment, spec_with,
                          table_spec)
from .fbm_env import FbmError, GridSpec, sample_fbm_cholesky, sample_fbm_circulant, save_path_csv
from .mh_core import ConfigError
from .scaling import figure1_curve, solve_optimal_a

__all__ = ["cli_main", "main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError(message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _chain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="key=value experiment spec file")
    p.add_argument("--kind", choices=TARGET_KINDS)
    p.add_argument("--hurst", type=float)
    p.add_argument("--c", type=float, help="localisation constant (mala_rough)")
    p.add_argument("--a", type=float, help="oscillation amplitude")
    p.add_argument("--b", type=float, help="oscillation frequency")
    p.add_argument("--env-seed", type=int, help="seed of the fBM environment")
    p.add_argument("--points", type=int, help="environment grid nodes")
    p.add_argument("--path-file", help="load the environment from a path CSV")
    p.add_argument("--algo", choices=("rwm", "mala"))
    p.add_argument("--ell", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--steps", type=int, help="post-burn-in iterations")
    p.add_argument("--burnin", type=int)
    p.add_argument("--seed", type=int, help="chain seed")
    p.add_argument("--init", choices=("stationary_table", "point", "burn_in_only"))
    p.add_argument("--convention", choices=("ell2", "ell"))
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="scaling-lab", description="Optimal-scaling experiments for RWM and MALA.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fbm", help="generate and export an fBM path")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--xmin", type=float, default=-9.0)
    p.add_argument("--xmax", type=float, default=9.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--method", choices=("circulant", "cholesky"), default="circulant")
    p.add_argument("--out", required=True, help="output CSV file")

    p = sub.add_parser("solve", help="optimal a and acceptance for a scaling exponent")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--out", help="append-free CSV output file")

    p = sub.add_parser("figure1", help="optimal acceptance curves over H")
    p.add_argument("--component", choices=("rwm", "mala", "both"), default="both")
    p.add_argument("--out", default="results", help="output directory")

    p = sub.add_parser("run", help="a single chain")
    _chain_flags(p)
    p.add_argument("--trace", action="store_true", help="also write trace and ACF files")

    p = sub.add_parser("sweep", help="an ell sweep")
    _chain_flags(p)
    p.add_argument("--ells", type=_floats, help="comma-separated ell values")
    p.add_argument("--replicas", type=int)
    p.add_argument("--workers", type=int)

    for name in ("table1", "table2", "table3"):
        p = sub.add_parser(name, help=f"{name} preset sweep")
        _chain_flags(p)
        p.add_argument("--ells", type=_floats)
        p.add_argument("--replicas", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--long", action="store_true", help="10^6 steps per chain")

    p = sub.add_parser("checks", help="fast identity and invariant suite")
    p.add_argument("--only", nargs="*", help="subset of check names")
    return ap


def _apply_overrides(spec: ExperimentSpec, args) -> ExperimentSpec:
    g = lambda name: getattr(args, name, None)
    target = {k: v for k, v in {
        "kind": g("kind"), "hurst": g("hurst"), "c": g("c"), "a": g("a"), "b": g("b"),
        "env_seed": g("env_seed"), "grid_points": g("points"), "path_file": g("path_file"),
    }.items() if v is not None}
    chain = {k: v for k, v in {
        "algo": g("algo"), "ell": g("ell"), "beta": g("beta"), "n": g("dim"), "steps": g("steps"),
        "burn_in": g("burnin"), "seed": g("seed"), "init": g("init"), "convention": g("convention"),
    }.items() if v is not None}
    sweep = {k: v for k, v in {"ell_list": g("ells"), "replicas": g("replicas"),
                               "workers": g("workers")}.items() if v is not None}
    output = {"out_dir": g("out")} if g("out") else {}
    if getattr(args, "trace", False):
        output["emit_traces"] = True
    return spec_with(spec, target=target, chain=chain, sweep=sweep, output=output)


def _cmd_fbm(args) -> int:
    grid = GridSpec(args.xmin, args.xmax, args.points)
    sampler = sample_fbm_cholesky if args.method == "cholesky" else sample_fbm_circulant
    path = sampler(grid, args.hurst, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_path_csv(path, args.out)
    print(f"wrote {args.out} ({grid.num_points} nodes, H={args.hurst}, seed={args.seed})")
    return 0


def _cmd_solve(args) -> int:
    sol = solve_optimal_a(args.beta, args.theta)
    print(f"beta={sol.beta:.12g} a_star={sol.a_star:.15g} acceptance_star={sol.acceptance_star:.15g}"
          f" residual={sol.residual:.3e}")
    if sol.ell_star_given_theta is not None:
        print(f"ell_star={sol.ell_star_given_theta:.15g} (theta={args.theta:.12g})")
    if args.out:
        emit_table([(sol.beta, sol.a_star, sol.acceptance_star)], ("beta", "a_star", "acceptance_star"),
                   args.out, provenance())
    return 0


def _cmd_figure1(args) -> int:
    comps = ("rwm", "mala") if args.component == "both" else (args.component,)
    rows = [(H, comp, acc) for comp in comps for H, _, _, acc in figure1_curve(comp)]
    plot = ("set xlabel 'H'\nset ylabel 'optimal acceptance'\nset logscale y\n"
            "plot '{data}' using 1:(strcol(2) eq 'rwm' ? $3 : 1/0) with lines title 'rwm', \\\n"
            "     '{data}' using 1:(strcol(2) eq 'mala' ? $3 : 1/0) with lines title 'mala'\n")
    out = emit_table(rows, ("H", "component", "acceptance_star"), Path(args.out) / "figure1.csv",
                     provenance(), plot=plot)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def _load_spec(args, default: ExperimentSpec) -> ExperimentSpec:
    spec = ExperimentSpec.load(args.spec) if getattr(args, "spec", None) else default
    return _apply_overrides(spec, args)


def _cmd_run(args) -> int:
    spec = _load_spec(args, ExperimentSpec(name="run"))
    summary, _ = run_experiment(spec)
    print(f"{summary.algo} on {summary.kind}: n={summary.n} ell={summary.ell:.12g} sigma={summary.sigma:.12g} "
          f"acceptance={summary.acceptance_rate:.12g} esjd_coord={summary.esjd_coord:.12g}")
    return 0


def _print_sweep(name, result) -> None:
    print(f"{name}: ell, acceptance, esjd_coord, esjd_full")
    for i, ell in enumerate(result.ell_list):
        print(f"  {ell:<8.4g} {result.mean_acceptance[i]:.6f}  {result.mean_esjd_coord[i]:.6e}"
              f"  {result.mean_esjd_full[i]:.6e}")
    print(f"  empirical esjd argmax at ell={result.argmax_ell:g}")


def _cmd_sweep(args) -> int:
    spec = _load_spec(args, ExperimentSpec(name="sweep"))
    result = run_sweep_experiment(spec)
    _print_sweep(spec.name, result)
    return 0


def _cmd_table(args) -> int:
    spec = _load_spec(args, table_spec(args.command, long_run=args.long))
    if args.long and args.steps is None:
        spec.chain.steps = 1_000_000
    result = run_sweep_experiment(spec)
    _print_sweep(spec.name, result)
    print(f"wrote {Path(spec.output.out_dir) / (spec.name + '.csv')}")
    return 0


def _cmd_checks(args) -> int:
    from .checks import CHECKS, run_checks

    names = args.only or None
    if names:
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise SpecError(f"unknown checks: {', '.join(unknown)}")
    results = run_checks(names)
    for r in results:
        print(f"[{'PASS' if r.ok else 'FAIL'}] {r.name}: {r.detail} ({r.seconds:.1f} s)")
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


_COMMANDS = {"fbm": _cmd_fbm, "solve": _cmd_solve, "figure1": _cmd_figure1, "run": _cmd_run,
             "sweep": _cmd_sweep, "table1": _cmd_table, "table2": _cmd_table, "table3": _cmd_table,
             "checks": _cmd_checks}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SpecError as exc:
        print(f"scaling-lab: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (SpecError, ConfigError, FbmError, ValueError, OSError) as exc:
        print(f"scaling-lab: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
