"""Experiment orchestration: build targets from specs, run chains and sweeps,
and write CSV tables with provenance headers and gnuplot scripts."""
from __future__ import annotations

import dataclasses
import logging
import math
import subprocess
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .config import ChainSpec, ExperimentSpec, SpecError, SweepSpec, TargetSpec
from .diagnostics import SUMMARY_COLUMNS, RunSummary
from .fbm_env import FbmPath, GridSpec, load_path_csv, sample_fbm_cholesky, sample_fbm_circulant
from .mh_core import ChainTrace, run_chain
from .scaling import SweepResult, ell_sweep
from .targets import (LocalisationParams, MarginalTarget, OscParams, build_gaussian, build_mala_rough,
                      build_oscillatory, build_rwm_rough, normalize_and_tabulate)

__all__ = [
    "TABLE_PRESETS",
    "table_spec",
    "build_environment",
    "build_target",
    "version_string",
    "provenance",
    "emit_table",
    "emit_trace",
    "emit_sweep",
    "run_experiment",
    "run_sweep_experiment",
]

log = logging.getLogger(__name__)

AGG_COLUMNS = ("ell", "replicas", "mean_acceptance", "se_acceptance", "mean_esjd_coord",
               "se_esjd_coord", "mean_esjd_full")


def _table1() -> ExperimentSpec:
    # rough RWM started from N(0,1) with a burn-in, proposal variance ell^2/n^2
    return ExperimentSpec(
        name="table1",
        target=TargetSpec(kind="rwm_rough", hurst=0.5, env_seed=1, x_min=-9.0, x_max=9.0,
                          grid_points=200_001),
        chain=ChainSpec(algo="rwm", n=200, steps=100_000, burn_in=10_000, init="burn_in_only", seed=7),
        sweep=SweepSpec(ell_list=(5.0, 5.5, 11.0, 12.0, 13.0, 14.0)),
    )


def _table2() -> ExperimentSpec:
    return ExperimentSpec(
        name="table2",
        target=TargetSpec(kind="rwm_osc", a=0.25, b=30.0),
        chain=ChainSpec(algo="rwm", n=100, steps=100_000, seed=7),
        sweep=SweepSpec(ell_list=(0.5, 0.65, 1.5, 2.0, 2.55, 3.0)),
    )


def _table3() -> ExperimentSpec:
    return ExperimentSpec(
        name="table3",
        target=TargetSpec(kind="mala_osc", a=0.9, b=5.0),
        chain=ChainSpec(algo="mala", n=100, steps=100_000, seed=7),
        sweep=SweepSpec(ell_list=(1.4, 1.51, 1.6, 1.67, 1.68, 1.7, 1.72, 1.73, 1.8)),
    )


TABLE_PRESETS = {"table1": _table1, "table2": _table2, "table3": _table3}


def table_spec(name: str, long_run: bool = False) -> ExperimentSpec:
    """Preset spec for one of the three tables; ``long_run`` uses 10^6 steps."""
    if name not in TABLE_PRESETS:
        raise SpecError(f"unknown table preset {name!r}")
    spec = TABLE_PRESETS[name]()
    if long_run:
        spec.chain.steps = 1_000_000
    return spec


def build_environment(t: TargetSpec) -> Optional[FbmPath]:
    """The fBM path for rough kinds: loaded from ``path_file`` or generated from ``env_seed``."""
    if not t.rough:
        return None
    if t.path_file:
        p = Path(t.path_file)
        if not p.is_file():
            raise SpecError(f"path file not found: {p}")
        path = load_path_csv(p)
        if not math.isclose(path.hurst, t.hurst):
            log.warning("path file Hurst %s overrides spec value %s", path.hurst, t.hurst)
        return path
    grid = GridSpec(t.x_min, t.x_max, t.grid_points)
    if t.method == "cholesky":
        return sample_fbm_cholesky(grid, t.hurst, t.env_seed)
    return sample_fbm_circulant(grid, t.hurst, t.env_seed)


def build_target(t: TargetSpec, path: Optional[FbmPath] = None) -> MarginalTarget:
    """Tabulated target for a spec; rough kinds reuse ``path`` when given."""
    if t.rough and path is None:
        path = build_environment(t)
    if t.kind == "rwm_rough":
        target = build_rwm_rough(path)
    elif t.kind == "mala_rough":
        target = build_mala_rough(path, LocalisationParams(t.c, path.hurst))
    elif t.kind in ("rwm_osc", "mala_osc"):
        target = build_oscillatory(t.kind, OscParams(t.a, t.b), (t.x_min, t.x_max))
    else:
        target = build_gaussian((t.x_min, t.x_max))
    return normalize_and_tabulate(target)


def version_string() -> str:
    """Package version plus the git commit of the source tree when available."""
    here = Path(__file__).resolve().parent
    try:
        sha = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=here, capture_output=True,
                             text=True, timeout=5, check=True).stdout.strip()
        dirty = subprocess.run(["git", "status", "--porcelain", "--", "."], cwd=here, capture_output=True,
                               text=True, timeout=5, check=True).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        return __version__
    return f"{__version__}+g{sha}{'.dirty' if dirty else ''}"


def provenance(spec: Optional[ExperimentSpec] = None, target: Optional[MarginalTarget] = None,
               extra: Optional[dict] = None) -> list[str]:
    """Header lines (without the leading '#'): version, target descriptor, spec echo."""
    lines = [f"scaling_lab version={version_string()}"]
    if target is not None:
        lines.append("target " + " ".join(f"{k}={v}" for k, v in target.describe().items()))
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    if spec is not None:
        lines.append("spec:")
        lines += ["  " + s for s in spec.to_text().splitlines()]
    return lines


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        # shortest string that round-trips to the same double
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _as_dict(row, schema: Sequence[str]) -> dict:
    if isinstance(row, RunSummary):
        return row.row()
    if isinstance(row, dict):
        return row
    return dict(zip(schema, row))


def emit_table(rows: Iterable, schema: Sequence[str], out_path, header: Sequence[str] = (),
               plot: Optional[str] = None) -> Path:
    """Write a comment-headed CSV and, if ``plot`` is given, a gnuplot script beside it.

    ``rows`` may hold RunSummary objects, dicts keyed by ``schema`` or plain
    tuples in schema order.  ``plot`` is the body of the gnuplot script; the
    CSV file name is substituted for ``{data}``.

    Raises:
        ValueError: no rows.
        OSError: the output path cannot be written.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to write an empty table")
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    body = ["# " + h for h in header]
    body.append(",".join(schema))
    for r in rows:
        d = _as_dict(r, schema)
        body.append(",".join(_fmt(d.get(k)) for k in schema))
    out.write_text("\n".join(body) + "\n")
    if plot is not None:
        script = out.with_suffix(".gp")
        script.write_text(f"# gnuplot script for {out.name}\nset datafile separator ','\n"
                          + plot.format(data=out.name))
    return out


_TABLE_PLOT = """set multiplot layout 1,2
set xlabel 'ell'
set ylabel 'acceptance'
plot '{data}' using 6:8 with linespoints notitle
set ylabel 'esjd per coordinate'
plot '{data}' using 6:9 with linespoints notitle
unset multiplot
"""

_TRACE_PLOT = """set multiplot layout 2,1
set xlabel 'lag'
set ylabel 'acf'
plot '{acf}' using 1:2 with impulses notitle
set xlabel 'step'
set ylabel 'first coordinate'
plot '{data}' using 1:2 with lines notitle
unset multiplot
"""


def emit_trace(summary: RunSummary, trace: ChainTrace, out_path, header: Sequence[str] = ()) -> Path:
    """Trace CSV ``step,coord1,psi,accepted`` (thinned), an ACF CSV and a gnuplot script."""
    out = Path(out_path)
    thin = summary.trace_thin
    idx = np.arange(0, trace.psi.size, thin)
    rows = [(int(i), trace.coord1[i], trace.psi[i], int(trace.accepted[i])) for i in idx]
    head = list(header) + [f"trace_thin={thin}", f"burn_in={summary.burn_in}"]
    acf_path = out.with_name(out.stem + "_acf.csv")
    emit_table(list(enumerate(summary.acf)), ("lag", "acf"), acf_path, head)
    return emit_table(rows, ("step", "coord1", "psi", "accepted"), out, head,
                      plot=_TRACE_PLOT.replace("{acf}", acf_path.name))


def run_experiment(spec: ExperimentSpec, out_dir=None, emit: bool = True) -> tuple[RunSummary, ChainTrace]:
    """Single chain at ``spec.chain.ell``; writes summary and optionally trace files."""
    path = build_environment(spec.target)
    target = build_target(spec.target, path)
    config = spec.chain.to_config(spec.target)
    summary, trace = run_chain(config, target, keep_psi=True)
    if emit:
        out = Path(out_dir or spec.output.out_dir)
        head = provenance(spec, target, {"chain_seed": config.seed, "sigma": _fmt(config.sigma)})
        emit_table([summary], SUMMARY_COLUMNS, out / f"{spec.name}_summary.csv", head)
        if spec.output.emit_traces:
            emit_trace(summary, trace, out / f"{spec.name}_trace.csv", head)
    return summary, trace


def emit_sweep(result: SweepResult, spec: ExperimentSpec, target: MarginalTarget, out_dir) -> Path:
    """Per-run CSV (one row per ell and replica) plus an aggregated CSV when replicated."""
    out = Path(out_dir)
    head = provenance(spec, target, {"chain_seed": spec.chain.seed,
                                     "task_seeds": "SeedSequence(chain_seed, spawn_key=(ell_index, replica))"})
    main = emit_table(result.rows, SUMMARY_COLUMNS, out / f"{spec.name}.csv", head, plot=_TABLE_PLOT)
    if result.replicas > 1:
        agg = [(e, result.replicas, result.mean_acceptance[i], result.se_acceptance[i],
                result.mean_esjd_coord[i], result.se_esjd_coord[i], result.mean_esjd_full[i])
               for i, e in enumerate(result.ell_list)]
        emit_table(agg, AGG_COLUMNS, out / f"{spec.name}_agg.csv", head)
    return main


def run_sweep_experiment(spec: ExperimentSpec, out_dir=None, emit: bool = True,
                         workers: Optional[int] = None) -> SweepResult:
    """Sweep ``spec.sweep.ell_list`` on one frozen environment."""
    if not spec.sweep.ell_list:
        raise SpecError("sweep needs a non-empty ell_list")
    path = build_environment(spec.target)
    target = build_target(spec.target, path)
    base = spec.chain.to_config(spec.target)
    nw = workers if workers is not None else (spec.sweep.workers or None)
    t0 = time.perf_counter()
    result = ell_sweep(base, target, spec.sweep.ell_list, spec.sweep.replicas, nw)
    log.info("%s: %d chains in %.1f s", spec.name, len(result.rows), time.perf_counter() - t0)
    if emit:
        emit_sweep(result, spec, target, out_dir or spec.output.out_dir)
    return result


def spec_with(spec: ExperimentSpec, **sections) -> ExperimentSpec:
    """Copy of ``spec`` with per-section field overrides, e.g. ``chain={'steps': 10}``."""
    new = dataclasses.replace(spec)
    for name, changes in sections.items():
        block = getattr(spec, name)
        setattr(new, name, dataclasses.replace(block, **changes))
    return new
