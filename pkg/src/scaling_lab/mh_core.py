"""Product-target RWM and MALA kernels with per-coordinate log-ratio accounting.

A chain on R^n targets prod_i pi(x_i).  Proposals are coordinate-wise
independent, so the log Metropolis-Hastings ratio is a sum of per-coordinate
terms rho(x_i, y_i); acceptance uses one uniform per step against
min(1, exp(sum rho)).

Random streams: every chain owns a ``numpy.random.Generator`` (PCG64).  Sweep
tasks derive theirs with :func:`task_rng`, i.e. ``SeedSequence(master_seed,
spawn_key=(task_index,))``, so results do not depend on scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import RunSummary, autocorrelation
from .targets import MarginalTarget

__all__ = [
    "ChainConfig",
    "ChainState",
    "StepRecord",
    "ChainTrace",
    "ConfigError",
    "task_rng",
    "rwm_propose",
    "mala_propose",
    "log_mh_ratio_terms",
    "log_mh_ratio",
    "log_mh_ratio_direct",
    "init_state",
    "mh_step",
    "run_chain",
    "sample_psi",
]

ALGOS = ("rwm", "mala")
INITS = ("stationary_table", "point", "burn_in_only")
CONVENTIONS = ("ell2", "ell")


class ConfigError(ValueError):
    """Invalid chain configuration or target/algorithm mismatch."""


def task_rng(master_seed: int, *task_index: int) -> np.random.Generator:
    """Independent generator for sweep task ``task_index`` of ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(i) for i in task_index))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ChainConfig:
    """Chain settings.

    Without ``sigma_override`` the per-coordinate proposal standard deviation
    is ``ell * n^(-1/(2 beta))`` (``convention="ell2"``, variance
    ell^2 n^(-1/beta)); ``convention="ell"`` uses variance ell * n^(-1/beta).
    ``steps`` counts post-burn-in iterations.
    """

    algo: str = "rwm"
    n: int = 100
    ell: float = 1.0
    beta: float = 1.0
    sigma_override: Optional[float] = None
    convention: str = "ell2"
    steps: int = 100_000
    burn_in: int = 0
    seed: int = 0
    init: str = "stationary_table"
    init_point: float = 0.0
    trace_thin: int = 1
    acf_max_lag: int = 200

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}")
        if self.n < 1:
            raise ConfigError("dimension must be >= 1")
        if not self.ell > 0 or not self.beta > 0:
            raise ConfigError("ell and beta must be positive")
        if self.sigma_override is not None and not self.sigma_override > 0:
            raise ConfigError("sigma_override must be positive")
        if not (self.steps > self.burn_in >= 0):
            raise ConfigError("need steps > burn_in >= 0")
        if self.trace_thin < 1:
            raise ConfigError("trace_thin must be >= 1")

    @property
    def sigma(self) -> float:
        if self.sigma_override is not None:
            return float(self.sigma_override)
        rate = self.n ** (-1.0 / self.beta)
        if self.convention == "ell2":
            return self.ell * math.sqrt(rate)
        return math.sqrt(self.ell * rate)


@dataclass
class ChainState:
    """Current point with cached log-density and (for MALA) gradient values."""

    x: np.ndarray
    log_xi: np.ndarray
    grad: Optional[np.ndarray] = None

    def refreshed(self, target: MarginalTarget, algo: str) -> "ChainState":
        return init_state(self.x, target, algo)


@dataclass(frozen=True)
class StepRecord:
    psi: float
    accepted: bool
    proposal_sq_jump_coord1: float
    full_sq_jump: float


@dataclass(frozen=True)
class ChainTrace:
    """Per-step post-burn-in record kept when ``run_chain(..., keep_psi=True)``."""

    psi: np.ndarray
    accepted: np.ndarray
    coord1: np.ndarray


def _require_gradient(target: MarginalTarget):
    if target.v_prime is None:
        raise ConfigError(f"target kind {target.kind!r} has no potential gradient; MALA needs one")


def _eval(target: MarginalTarget, y: np.ndarray, algo: str):
    if algo == "mala":
        if target.log_xi_and_grad is not None:
            return target.log_xi_and_grad(y)
        return target.log_xi(y), target.v_prime(y)
    return target.log_xi(y), None


def init_state(x, target: MarginalTarget, algo: str) -> ChainState:
    x = np.array(x, dtype=float)
    if not np.all(target.in_domain(x)):
        raise ConfigError("initial point outside the target domain")
    if algo == "mala":
        _require_gradient(target)
    lx, gx = _eval(target, x, algo)
    return ChainState(x, np.asarray(lx, dtype=float), None if gx is None else np.asarray(gx, dtype=float))


def rwm_propose(state: ChainState, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return state.x + sigma * rng.standard_normal(state.x.shape)


def mala_propose(state: ChainState, sigma: float, target: MarginalTarget,
                 rng: np.random.Generator) -> np.ndarray:
    """x + (sigma^2/2) V'(x) + sigma * N(0, I), coordinate-wise."""
    _require_gradient(target)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    grad = state.grad if state.grad is not None else target.v_prime(state.x)
    return state.x + 0.5 * sigma * sigma * grad + sigma * rng.standard_normal(state.x.shape)


def log_mh_ratio_terms(x, y, sigma: float, target: MarginalTarget, algo: str,
                       log_x=None, grad_x=None, log_y=None, grad_y=None) -> np.ndarray:
    """Per-coordinate log-ratio rho(x_i, y_i); -inf where y_i leaves the domain.

    RWM: log xi(y) - log xi(x).  MALA, with d = y - x:
    V(y) - V(x) - (d/2)(V'(x) + V'(y)) - (sigma^2/8)(V'(y)^2 - V'(x)^2).

    Raises:
        FloatingPointError: non-finite potential at an in-domain point.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if algo == "mala":
        _require_gradient(target)
    inside = target.in_domain(y)
    rho = np.full(np.broadcast(x, y).shape, -np.inf)
    if not np.any(inside):
        return rho
    all_in = bool(np.all(inside))
    xi = x if all_in else x[inside]
    yi = y if all_in else y[inside]

    def pick(v):
        if v is None:
            return None
        v = np.asarray(v, dtype=float)
        return v if all_in else v[inside]

    lx, gx, ly, gy = pick(log_x), pick(grad_x), pick(log_y), pick(grad_y)
    if lx is None or (algo == "mala" and gx is None):
        lx, gx = _eval(target, xi, algo)
    if ly is None or (algo == "mala" and gy is None):
        ly, gy = _eval(target, yi, algo)
    if algo == "rwm":
        r = ly - lx
    else:
        d = yi - xi
        r = ly - lx - 0.5 * d * (gx + gy) - 0.125 * sigma * sigma * (gy - gx) * (gy + gx)
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("non-finite potential at an in-domain point")
    if all_in:
        return np.asarray(r, dtype=float).reshape(rho.shape)
    rho[inside] = r
    return rho


def log_mh_ratio(state, proposal, sigma: float, target: MarginalTarget, algo: str) -> float:
    """Summed log-ratio Psi for moving ``state`` (ChainState or array) to ``proposal``."""
    if isinstance(state, ChainState):
        rho = log_mh_ratio_terms(state.x, proposal, sigma, target, algo,
                                 log_x=state.log_xi, grad_x=state.grad)
    else:
        rho = log_mh_ratio_terms(state, proposal, sigma, target, algo)
    return float(np.sum(rho))


def log_mh_ratio_direct(x, y, sigma: float, target: MarginalTarget, algo: str) -> np.ndarray:
    """log pi(y) q(y, x) - log pi(x) q(x, y) from the Gaussian proposal densities."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = target.log_xi(y) - target.log_xi(x)
    if algo == "mala":
        mx = x + 0.5 * sigma**2 * target.v_prime(x)
        my = y + 0.5 * sigma**2 * target.v_prime(y)
        out = out - (x - my) ** 2 / (2 * sigma**2) + (y - mx) ** 2 / (2 * sigma**2)
    return out


def mh_step(state: ChainState, sigma: float, target: MarginalTarget, algo: str,
            z: np.ndarray, log_u: float) -> tuple[ChainState, StepRecord]:
    """One MH transition driven by the given normal noise and log-uniform."""
    x = state.x
    if algo == "mala":
        y = x + 0.5 * sigma * sigma * state.grad + sigma * z
    else:
        y = x + sigma * z
    lo, hi = target.domain
    ly = gy = None
    if y.min() < lo or y.max() > hi:
        psi = -math.inf
    else:
        ly, gy = _eval(target, y, algo)
        rho = log_mh_ratio_terms(x, y, sigma, target, algo, log_x=state.log_xi,
                                 grad_x=state.grad, log_y=ly, grad_y=gy)
        psi = float(rho.sum())
    d = y - x
    full = float(d @ d)
    rec = StepRecord(psi, log_u < psi, float(d[0] * d[0]), full)
    if rec.accepted:
        state = ChainState(y, np.asarray(ly, dtype=float), None if gy is None else np.asarray(gy, dtype=float))
    return state, rec


def _initial_point(config: ChainConfig, target: MarginalTarget, rng: np.random.Generator) -> np.ndarray:
    if config.init == "stationary_table":
        if target.cdf_table is None:
            raise ConfigError("stationary start needs a tabulated target")
        return target.sample(rng, config.n)
    if config.init == "point":
        return np.full(config.n, float(config.init_point))
    lo, hi = target.domain
    return np.clip(rng.standard_normal(config.n), lo, hi)


def run_chain(config: ChainConfig, target: MarginalTarget,
              rng: Optional[np.random.Generator] = None, keep_psi: bool = False):
    """Run ``burn_in + steps`` MH iterations and summarize the last ``steps``.

    ESJD estimators use the realized squared displacement times the
    acceptance indicator.  The coordinate-1 trace is kept (thinned by
    ``config.trace_thin``) and its ACF is computed from the unthinned trace.
    With ``keep_psi`` a :class:`ChainTrace` of the unthinned post-burn-in
    Psi values, accept flags and coordinate-1 trace is returned as well.
    """
    if config.algo == "mala":
        _require_gradient(target)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    sigma = config.sigma
    n = config.n
    state = init_state(_initial_point(config, target, rng), target, config.algo)
    total = config.burn_in + config.steps
    keep = config.steps
    psi = np.empty(keep)
    acc = np.zeros(keep, dtype=bool)
    jump_full = np.empty(keep)
    jump1 = np.empty(keep)
    trace = np.empty(keep)
    block = 2048
    t = 0
    while t < total:
        b = min(block, total - t)
        Z = rng.standard_normal((b, n))
        logU = np.log(rng.random(b))
        for j in range(b):
            state, rec = mh_step(state, sigma, target, config.algo, Z[j], logU[j])
            k = t + j - config.burn_in
            if k >= 0:
                psi[k] = rec.psi
                acc[k] = rec.accepted
                jump_full[k] = rec.full_sq_jump
                jump1[k] = rec.proposal_sq_jump_coord1
                trace[k] = state.x[0]
        t += b

    finite = np.isfinite(psi)
    pf = psi[finite]
    max_lag = min(config.acf_max_lag, max(1, keep // 10))
    acf, flat = autocorrelation(trace, max_lag, return_flag=True)
    accf = acc.astype(float)
    with np.errstate(over="ignore"):
        alpha = np.minimum(1.0, np.exp(np.minimum(psi, 0.0)))
    summary = RunSummary(
        algo=config.algo, kind=target.kind, n=n, ell=config.ell, beta=config.beta,
        sigma=sigma, seed=config.seed, steps=config.steps, burn_in=config.burn_in,
        acceptance_rate=float(accf.mean()),
        esjd_coord=float(np.mean(jump_full * accf) / n),
        esjd_full=float(np.mean(jump_full * accf)),
        esjd_coord1=float(np.mean(jump1 * accf)),
        psi_mean=float(pf.mean()) if pf.size else math.nan,
        psi_var=float(pf.var(ddof=1)) if pf.size > 1 else math.nan,
        mean_alpha=float(alpha.mean()),
        acf=acf,
        H=target.params.get("H"), c=target.params.get("c"),
        init=config.init,
        trace=trace[:: config.trace_thin].copy(),
        trace_thin=config.trace_thin,
        zero_variance_trace=flat,
    )
    if keep_psi:
        return summary, ChainTrace(psi, acc, trace)
    return summary


def sample_psi(target: MarginalTarget, algo: str, n: int, sigma: float, size: int,
               rng: np.random.Generator, chunk_elems: int = 1 << 22) -> np.ndarray:
    """Independent Psi draws with X ~ prod pi (table) and Y ~ proposal from X."""
    if algo == "mala":
        _require_gradient(target)
    out = np.empty(size)
    rows = max(1, chunk_elems // n)
    for lo in range(0, size, rows):
        m = min(rows, size - lo)
        x = target.sample(rng, (m, n)).ravel()
        z = rng.standard_normal(m * n)
        lx, gx = _eval(target, x, algo)
        if algo == "mala":
            y = x + 0.5 * sigma * sigma * gx + sigma * z
        else:
            y = x + sigma * z
        rho = log_mh_ratio_terms(x, y, sigma, target, algo, log_x=lx, grad_x=gx)
        out[lo:lo + m] = rho.reshape(m, n).sum(axis=1)
    return out
