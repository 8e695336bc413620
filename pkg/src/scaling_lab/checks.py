"""Fast identity and invariant checks run by the ``checks`` subcommand.

Each check returns a :class:`CheckResult`; the suite takes a few seconds and
uses small Monte Carlo budgets with wide (5 standard error) tolerances.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diagnostics import autocorrelation, mala_rational_factor, mn_variance_kernel, sigma2_quadrature, sigma2_rwm
from .fbm_env import GridSpec, fbm_covariance_matrix, sample_fbm_circulant, sample_fbm_circulant_batch
from .gauss_moments import exp_tilted_proper_moment, isserlis_moment, proper_pairing_moment
from .mh_core import log_mh_ratio_direct, log_mh_ratio_terms, sample_psi, task_rng
from .scaling import figure1_curve, solve_optimal_a
from .targets import (LocalisationParams, OscParams, build_mala_rough, build_oscillatory, build_rwm_rough,
                      normalize_and_tabulate)

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0


def _solver_anchors():
    want = {1.0: (0.2338, 1e-3), 3.0: (0.5740, 1e-3), 0.5: (0.070, 3e-3), 0.25: (0.007, 1e-3)}
    got = {b: solve_optimal_a(b) for b in want}
    ok = all(abs(got[b].acceptance_star - v) <= tol and abs(got[b].residual) < 1e-10
             for b, (v, tol) in want.items())
    return ok, " ".join(f"beta={b}:{got[b].acceptance_star:.6f}" for b in want)


def _kernel_integral():
    errs = [abs(mn_variance_kernel(H) + mala_rational_factor(H)) for H in (0.1, 0.5, 0.9)]
    return max(errs) < 1e-6, f"max error {max(errs):.2e}"


def _figure1_monotone():
    acc = [r[3] for r in figure1_curve("rwm")] + [r[3] for r in figure1_curve("mala")]
    rwm, mala = acc[:99], acc[99:]
    ok = all(np.diff(rwm) > 0) and all(np.diff(mala) > 0)
    return ok, f"rwm {rwm[0]:.2e}..{rwm[-1]:.4f}, mala {mala[0]:.4f}..{mala[-1]:.4f}"


def _wick_vs_mc():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3))
    R = A @ A.T / 3 + 0.2 * np.eye(3)
    X = rng.multivariate_normal(np.zeros(3), R, size=400_000)
    sq = X**2 - np.diag(R)
    queries = [
        ("x0 x1 x2 x2", isserlis_moment(R, [0, 1, 2, 2]), X[:, 0] * X[:, 1] * X[:, 2] ** 2),
        ("(x0^2-R)(x1^2-R)", proper_pairing_moment(R, [0, 1]), sq[:, 0] * sq[:, 1]),
        ("(x1^2-R) x0 x2", proper_pairing_moment(R, [1], [0, 2]), sq[:, 1] * X[:, 0] * X[:, 2]),
        ("e^x0 (x1^2-R)(x2^2-R)", exp_tilted_proper_moment(R, [1, 2]), np.exp(X[:, 0]) * sq[:, 1] * sq[:, 2]),
    ]
    worst = 0.0
    for _, exact, samples in queries:
        se = samples.std() / math.sqrt(samples.size)
        worst = max(worst, abs(samples.mean() - exact) / se)
    return worst < 5.0, f"worst deviation {worst:.2f} standard errors"


def _fbm_covariance():
    grid = GridSpec(-1.0, 2.0, 16)
    H = 0.3
    paths = sample_fbm_circulant_batch(grid, H, 40_000, seed=3)
    C = fbm_covariance_matrix(grid.nodes(), H)
    S = paths.T @ paths / paths.shape[0]
    se = np.sqrt((np.outer(np.diag(C), np.diag(C)) + C**2) / paths.shape[0])
    mask = se > 0
    z = np.abs(S - C)[mask] / se[mask]
    return z.max() < 5.0, f"max |z| {z.max():.2f}"


def _mh_ratio_forms():
    targets = [
        (normalize_and_tabulate(build_oscillatory("rwm_osc", OscParams(0.25, 30.0))), "rwm"),
        (normalize_and_tabulate(build_oscillatory("mala_osc", OscParams(0.9, 5.0))), "mala"),
    ]
    path = sample_fbm_circulant(GridSpec(-9.0, 9.0, 20_001), 0.5, seed=2)
    targets.append((normalize_and_tabulate(build_mala_rough(path, LocalisationParams(0.1, 0.5))), "mala"))
    rng = np.random.default_rng(5)
    worst = 0.0
    for t, algo in targets:
        x = t.sample(rng, 2000)
        y = np.clip(x + 0.3 * rng.standard_normal(2000), *t.domain)
        a = log_mh_ratio_terms(x, y, 0.3, t, algo)
        b = log_mh_ratio_direct(x, y, 0.3, t, algo)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-9, f"max |difference| {worst:.2e}"


def _acf_ar1():
    rng = np.random.default_rng(9)
    phi, N = 0.7, 200_000
    e = rng.standard_normal(N)
    x = np.empty(N)
    x[0] = e[0] / math.sqrt(1 - phi**2)
    for i in range(1, N):
        x[i] = phi * x[i - 1] + e[i]
    acf = autocorrelation(x, 10)
    err = float(np.max(np.abs(acf - phi ** np.arange(11))))
    return err < 0.02, f"max error {err:.4f}"


def _sigma2_rwm_quadrature():
    H, ell = 0.5, 1.0
    q = sigma2_quadrature(lambda x, z: np.abs(z) ** (2 * H), ell, H)
    exact = sigma2_rwm(H, ell)
    return abs(q - exact) < 1e-8, f"closed form {exact:.10f}, quadrature {q:.10f}"


def _exp_psi_mean():
    path = sample_fbm_circulant(GridSpec(-9.0, 9.0, 20_001), 0.5, seed=4)
    t = normalize_and_tabulate(build_rwm_rough(path))
    n = 50
    psi = sample_psi(t, "rwm", n, 1.0 / n, 100_000, task_rng(4, 0))
    w = np.exp(psi)
    z = abs(w.mean() - 1.0) / (w.std() / math.sqrt(w.size))
    return z < 5.0, f"mean exp(Psi) = {w.mean():.4f} ({z:.2f} standard errors from 1)"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "solver_anchors": _solver_anchors,
    "kernel_integral": _kernel_integral,
    "figure1_monotone": _figure1_monotone,
    "wick_vs_monte_carlo": _wick_vs_mc,
    "fbm_covariance": _fbm_covariance,
    "mh_ratio_forms": _mh_ratio_forms,
    "acf_ar1": _acf_ar1,
    "sigma2_rwm_quadrature": _sigma2_rwm_quadrature,
    "exp_psi_mean": _exp_psi_mean,
}


def run_checks(names=None) -> list[CheckResult]:
    out = []
    for name in names or CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = CHECKS[name]()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
