"""Optimal acceptance rates from the limiting speed W(ell), and ell sweeps.

With Psi ~ N(-s^2/2, s^2) and s = ell^beta * theta, the limiting
per-coordinate jump speed is W(ell) = 2 ell^2 Phi(-ell^beta theta / 2).
Setting dW/dell = 0 and writing a = ell^beta theta / 2 gives

    2 Phi(-a) = beta * a * phi(a),

which has one positive root because a phi(a) / Phi(-a) increases
strictly.  The optimal acceptance is 2 Phi(-a*).  The root is found on the
log scale, log a - a^2/2 - log sqrt(2 pi) - log Phi(-a) = log(2/beta), with
Brent's method; scipy's ``ndtr``/``log_ndtr`` (Cephes) give Phi to ~1e-16.
"""
from __future__ import annotations

import math
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr, ndtr

from .diagnostics import RunSummary
from .mh_core import ChainConfig, run_chain, task_rng

__all__ = [
    "OptimalTuning",
    "stationarity_residual",
    "solve_optimal_a",
    "speed_W",
    "theta_from_sigma2",
    "figure1_curve",
    "SweepResult",
    "ell_sweep",
    "worker_count",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OptimalTuning:
    beta: float
    a_star: float
    acceptance_star: float
    residual: float
    ell_star_given_theta: Optional[float] = None


def stationarity_residual(a: float, beta: float) -> float:
    """2 Phi(-a) - beta a phi(a)."""
    return float(2.0 * ndtr(-a) - beta * a * math.exp(-0.5 * a * a - _LOG_SQRT_2PI))


def _log_ratio_gap(a: float, beta: float) -> float:
    return math.log(a) - 0.5 * a * a - _LOG_SQRT_2PI - float(log_ndtr(-a)) - math.log(2.0 / beta)


def solve_optimal_a(beta: float, theta: Optional[float] = None) -> OptimalTuning:
    """Root a* of 2 Phi(-a) = beta a phi(a) and the acceptance 2 Phi(-a*).

    With ``theta`` given, also returns the maximizing ell = (2 a*/theta)^(1/beta).

    Raises:
        ValueError: non-positive beta.
        RuntimeError: the bracket could not be expanded around the root.
    """
    beta = float(beta)
    if not beta > 0:
        raise ValueError("beta must be positive")
    lo, hi = 1e-3, 8.0
    for _ in range(200):
        if _log_ratio_gap(lo, beta) < 0:
            break
        lo /= 10.0
    for _ in range(200):
        if _log_ratio_gap(hi, beta) > 0:
            break
        hi *= 2.0
    if not (_log_ratio_gap(lo, beta) < 0 < _log_ratio_gap(hi, beta)):
        raise RuntimeError(f"could not bracket the optimal a for beta={beta}")
    a = brentq(_log_ratio_gap, lo, hi, args=(beta,), xtol=1e-15, rtol=1e-15, maxiter=500)
    ell_star = None
    if theta is not None:
        ell_star = (2.0 * a / theta) ** (1.0 / beta)
    return OptimalTuning(beta, float(a), float(2.0 * ndtr(-a)), stationarity_residual(a, beta), ell_star)


def speed_W(ell, beta: float, theta: float):
    """W(ell) = 2 ell^2 Phi(-ell^beta theta / 2)."""
    ell = np.asarray(ell, dtype=float)
    if np.any(ell <= 0) or not theta > 0:
        raise ValueError("ell and theta must be positive")
    out = 2.0 * ell**2 * ndtr(-(ell**beta) * theta / 2.0)
    return float(out) if out.ndim == 0 else out


def theta_from_sigma2(sigma2: float, ell: float, beta: float) -> float:
    """theta such that ell^beta theta equals the limiting log-ratio std sqrt(sigma2)."""
    return math.sqrt(sigma2) / ell**beta


def figure1_curve(component: str, H_grid: Optional[Sequence[float]] = None) -> list[tuple[float, float, float, float]]:
    """Rows (H, beta, a_star, acceptance_star); beta = H for rwm and 2 + H for mala."""
    if component not in ("rwm", "mala"):
        raise ValueError("component must be 'rwm' or 'mala'")
    if H_grid is None:
        H_grid = np.round(np.arange(1, 100) / 100.0, 2)
    rows = []
    for H in H_grid:
        if not 0 < H < 1 + 1e-12:
            raise ValueError("H values must lie in (0, 1]")
        beta = H if component == "rwm" else 2.0 + H
        sol = solve_optimal_a(beta)
        rows.append((float(H), beta, sol.a_star, sol.acceptance_star))
    return rows


def worker_count(requested: Optional[int] = None) -> int:
    """Worker pool size, capped by the SCALING_LAB_THREADS environment variable."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("SCALING_LAB_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))


@dataclass
class SweepResult:
    rows: list[RunSummary]
    ell_list: list[float]
    replicas: int
    mean_acceptance: np.ndarray = field(repr=False)
    se_acceptance: np.ndarray = field(repr=False)
    mean_esjd_coord: np.ndarray = field(repr=False)
    se_esjd_coord: np.ndarray = field(repr=False)
    mean_esjd_full: np.ndarray = field(repr=False)

    @property
    def argmax_ell(self) -> float:
        return self.ell_list[int(np.argmax(self.mean_esjd_coord))]

    def by_ell(self, ell: float) -> list[RunSummary]:
        return [r for r in self.rows if r.ell == ell]


# Sweep workers inherit the target through fork; closures in a target cannot
# be pickled.
_SWEEP_TARGET = None


def _sweep_task(args):
    config, master_seed, index = args
    return run_chain(config, _SWEEP_TARGET, task_rng(master_seed, *index))


def _se(v: np.ndarray) -> float:
    return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan


def ell_sweep(base_config: ChainConfig, target, ell_list: Sequence[float], replicas: int = 1,
              workers: Optional[int] = None) -> SweepResult:
    """Run ``replicas`` chains per ell; task (i, r) uses ``task_rng(seed, i, r)``.

    Rows are returned in (ell, replica) order whatever the pool size.
    """
    global _SWEEP_TARGET
    ell_list = [float(e) for e in ell_list]
    if not ell_list or replicas < 1:
        raise ValueError("need at least one ell and one replica")
    tasks = [(replace(base_config, ell=ell), base_config.seed, (i, r))
             for i, ell in enumerate(ell_list) for r in range(replicas)]
    nw = min(worker_count(workers), len(tasks))
    _SWEEP_TARGET = target
    try:
        if nw > 1 and "fork" in mp.get_all_start_methods():
            with ProcessPoolExecutor(nw, mp_context=mp.get_context("fork")) as ex:
                rows = list(ex.map(_sweep_task, tasks))
        else:
            rows = [_sweep_task(t) for t in tasks]
    finally:
        _SWEEP_TARGET = None
    acc = np.array([r.acceptance_rate for r in rows]).reshape(len(ell_list), replicas)
    ec = np.array([r.esjd_coord for r in rows]).reshape(len(ell_list), replicas)
    ef = np.array([r.esjd_full for r in rows]).reshape(len(ell_list), replicas)
    return SweepResult(
        rows=rows, ell_list=ell_list, replicas=replicas,
        mean_acceptance=acc.mean(axis=1), se_acceptance=np.array([_se(a) for a in acc]),
        mean_esjd_coord=ec.mean(axis=1), se_esjd_coord=np.array([_se(e) for e in ec]),
        mean_esjd_full=ef.mean(axis=1),
    )
