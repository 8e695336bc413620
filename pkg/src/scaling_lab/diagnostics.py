"""Estimators and limiting formulas for the log-MH ratio and chain output."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, stats
from scipy.special import gamma as gamma_fn, ndtr

__all__ = [
    "RunSummary",
    "TheoryParams",
    "CltReport",
    "DecayFit",
    "SUMMARY_COLUMNS",
    "sigma2_rwm",
    "sigma2_mala",
    "mala_rational_factor",
    "sigma2_quadrature",
    "abs_normal_moment",
    "mn_variance_kernel",
    "limiting_acceptance",
    "clt_report",
    "GapEstimate",
    "psi_gap_estimate",
    "estimate_In_decay",
    "autocorrelation",
]

SUMMARY_COLUMNS = ("algo", "kind", "H", "c", "n", "ell", "sigma", "acceptance",
                   "esjd_coord", "esjd_full", "psi_mean", "psi_var", "seed", "steps")


@dataclass
class RunSummary:
    """Post-burn-in statistics of one chain.

    ``esjd_coord`` averages the accepted squared jump over all coordinates
    (exchangeable, so it estimates the coordinate-1 value with less noise);
    ``esjd_coord1`` uses coordinate 1 alone.  ``esjd_full`` is the squared
    Euclidean jump of the whole vector.
    """

    algo: str
    kind: str
    n: int
    ell: float
    beta: float
    sigma: float
    seed: int
    steps: int
    burn_in: int
    acceptance_rate: float
    esjd_coord: float
    esjd_full: float
    esjd_coord1: float
    psi_mean: float
    psi_var: float
    mean_alpha: float
    acf: np.ndarray = field(repr=False)
    H: Optional[float] = None
    c: Optional[float] = None
    init: str = "stationary_table"
    trace: Optional[np.ndarray] = field(default=None, repr=False)
    trace_thin: int = 1
    zero_variance_trace: bool = False

    def row(self) -> dict:
        return {
            "algo": self.algo, "kind": self.kind, "H": self.H, "c": self.c, "n": self.n,
            "ell": self.ell, "sigma": self.sigma, "acceptance": self.acceptance_rate,
            "esjd_coord": self.esjd_coord, "esjd_full": self.esjd_full,
            "psi_mean": self.psi_mean, "psi_var": self.psi_var,
            "seed": self.seed, "steps": self.steps,
        }

    def same_numbers(self, other: "RunSummary") -> bool:
        a, b = asdict(self), asdict(other)
        for key in a:
            x, y = a[key], b[key]
            if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
                if x is None or y is None or not np.array_equal(x, y):
                    return False
            elif x != y and not (isinstance(x, float) and math.isnan(x) and math.isnan(y)):
                return False
        return True


@dataclass(frozen=True)
class TheoryParams:
    H: float
    ell: float
    c: Optional[float] = None
    phi_sq: Optional[float] = None


def abs_normal_moment(p: float) -> float:
    """E|Z|^p for standard normal Z."""
    return 2.0 ** (p / 2.0) * gamma_fn((p + 1.0) / 2.0) / math.sqrt(math.pi)


def sigma2_rwm(H: float, ell: float) -> float:
    """Limiting variance of the summed log-ratio for rough RWM."""
    return ell ** (2.0 * H) * 2.0**H / math.sqrt(math.pi) * gamma_fn(H + 0.5)


def mala_rational_factor(H: float) -> float:
    return H / (2.0 + 7.0 * H + 7.0 * H**2 + 2.0 * H**3)


def sigma2_mala(H: float, ell: float, phi_sq: float, h_prefactor: float = 0.5) -> float:
    """Limiting variance of the summed log-ratio for rough MALA.

    ``h_prefactor`` multiplies the one-point variance kernel
    ``rational(H) * phi^2 * |z|^(4+2H)``.  The default 0.5 gives the closed form
    ``ell^(4+2H) 2^(1+H) Gamma(H+5/2)/sqrt(pi) * rational(H) * phi_sq``.
    Direct computation of Var[(s^2 z^2/2) int_0^1 B_{x+tsz}(1-2t) dt] gives a
    prefactor of 1/8, and Monte Carlo second moments of the log-ratio agree
    with 1/8 (see ``tests/test_diagnostics.py``).
    """
    if phi_sq == 0:
        return 0.0
    beta = 2.0 + H
    return (ell ** (2.0 * beta) * h_prefactor * mala_rational_factor(H)
            * abs_normal_moment(4.0 + 2.0 * H) * phi_sq)


def sigma2_quadrature(h: Callable[[np.ndarray, np.ndarray], np.ndarray], ell: float, beta: float,
                      x_nodes: Optional[np.ndarray] = None, x_density: Optional[np.ndarray] = None) -> float:
    """ell^(2 beta) * int int h(x, z) pi(x) nu(z) dx dz by quadrature.

    ``nu`` is the standard normal density, integrated with adaptive
    quadrature.  Without ``x_nodes`` the kernel is evaluated at x=0 (for
    kernels that do not depend on x); otherwise the x-integral is the
    trapezoid rule of ``h * x_density`` over ``x_nodes``.
    """
    nu = stats.norm.pdf
    if x_nodes is None:
        def inner(z):
            return float(h(np.zeros(1), np.array([z]))[0]) * nu(z)
    else:
        def inner(z):
            hz = h(x_nodes, np.full_like(x_nodes, z))
            return float(integrate.trapezoid(hz * x_density, x_nodes)) * nu(z)
    total = 0.0
    for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)):
        val, _ = integrate.quad(inner, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return ell ** (2.0 * beta) * total


def mn_variance_kernel(H: float) -> float:
    """int_0^1 int_0^1 |t-s|^(2H) (1-2t)(1-2s) dt ds by double quadrature.

    The square is split along the diagonal so each piece has a smooth
    integrand; the two triangles are equal by symmetry but both are computed.
    """
    f = lambda s, t: abs(t - s) ** (2.0 * H) * (1.0 - 2.0 * t) * (1.0 - 2.0 * s)
    lower, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, lambda t: t, epsabs=1e-13, epsrel=1e-12)
    upper, _ = integrate.dblquad(f, 0.0, 1.0, lambda t: t, 1.0, epsabs=1e-13, epsrel=1e-12)
    return lower + upper


def limiting_acceptance(sigma2: float) -> float:
    """E[min(1, e^W)] for W ~ N(-sigma2/2, sigma2), i.e. 2 Phi(-sqrt(sigma2)/2)."""
    if sigma2 < 0:
        raise ValueError("variance must be non-negative")
    return float(2.0 * ndtr(-math.sqrt(sigma2) / 2.0))


@dataclass(frozen=True)
class CltReport:
    mean: float
    var: float
    mean_plus_half_var: float
    normality_distance: float
    size: int

    @property
    def relative_gap(self) -> float:
        """|mean + var/2| / var."""
        return abs(self.mean_plus_half_var) / self.var if self.var > 0 else math.inf


def clt_report(psi_samples) -> CltReport:
    """Moments of log-ratio samples and KS distance of their standardization to N(0,1)."""
    psi = np.asarray(psi_samples, dtype=float)
    if psi.size < 1000:
        raise ValueError("clt_report needs at least 1000 samples")
    m, v = float(psi.mean()), float(psi.var(ddof=1))
    if v > 0:
        ks = float(stats.kstest((psi - m) / math.sqrt(v), "norm").statistic)
    else:
        ks = 0.0
    return CltReport(m, v, m + 0.5 * v, ks, int(psi.size))


@dataclass(frozen=True)
class GapEstimate:
    """Estimate of |E Psi + Var Psi / 2| / Var Psi with its standard error."""

    sigma: float
    gap: float
    se: float
    rho_mean: float
    rho_var: float
    samples: int


def psi_gap_estimate(target, algo: str, sigma: float, samples: int, rng: np.random.Generator,
                     chunk: int = 1 << 20) -> GapEstimate:
    """Relative gap between E Psi and -Var Psi / 2 from single-coordinate moments.

    Stationary coordinates are i.i.d., so E Psi = n E rho and Var Psi = n Var rho
    and the ratio depends on n only through sigma.  Since E[exp(rho)] = 1 for
    an exact stationary draw (up to the negligible mass of proposals leaving
    the domain), ``expm1(rho)`` is a zero-mean control variate:

        E rho + Var rho / 2 = E[rho + rho^2/2 - expm1(rho)] - (E rho)^2 / 2,

    and the bracketed term is of third order in rho, so its sampling noise is
    far below that of the naive estimate.
    """
    from .mh_core import log_mh_ratio_terms

    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    s1 = s2 = sc = sc2 = 0.0
    for lo in range(0, samples, chunk):
        m = min(chunk, samples - lo)
        x = target.sample(rng, m)
        z = rng.standard_normal(m)
        if algo == "mala":
            gx = target.v_prime(x)
            y = x + 0.5 * sigma * sigma * gx + sigma * z
        else:
            gx = None
            y = x + sigma * z
        rho = log_mh_ratio_terms(x, y, sigma, target, algo, grad_x=gx)
        rho = np.where(np.isfinite(rho), rho, 0.0)
        cv = rho + 0.5 * rho * rho - np.expm1(rho)
        s1 += math.fsum(rho)
        s2 += math.fsum(rho * rho)
        sc += math.fsum(cv)
        sc2 += math.fsum(cv * cv)
    mean = s1 / samples
    var = s2 / samples - mean * mean
    cmean = sc / samples
    cse = math.sqrt(max(sc2 / samples - cmean * cmean, 0.0) / samples)
    num = cmean - 0.5 * mean * mean
    return GapEstimate(sigma, abs(num) / var, cse / var, mean, var, samples)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    sigmas: np.ndarray
    second_moments: np.ndarray
    expected_slope: float

    def __float__(self):
        return self.slope


def estimate_In_decay(target, H: float, beta: float, sigma_list: Sequence[float], samples: int,
                      seed: int = 0, algo: Optional[str] = None) -> DecayFit:
    """Log-log slope of E[rho^2(x, x + sigma z)] against sigma.

    x is drawn from the target's table, z from N(0,1); the same draws are
    reused for every sigma.  The expected slope is 2 * beta.

    Raises:
        ValueError: sigma_list spanning under 1.5 decades or fewer than 10^5 samples.
    """
    from .mh_core import log_mh_ratio_terms

    sig = np.sort(np.asarray(sigma_list, dtype=float))
    if sig.size < 2 or math.log10(sig[-1] / sig[0]) < 1.5 - 1e-12:
        raise ValueError("sigma_list must span at least 1.5 decades")
    if samples < 100_000:
        raise ValueError("need at least 1e5 samples per sigma")
    if algo is None:
        algo = "mala" if target.kind.startswith("mala") else "rwm"
    rng = np.random.default_rng(seed)
    x = target.sample(rng, samples)
    z = rng.standard_normal(samples)
    lx = target.log_xi(x)
    gx = target.v_prime(x) if algo == "mala" else None
    moments = np.empty(sig.size)
    chunk = 1 << 18
    for i, s in enumerate(sig):
        acc = []
        for lo in range(0, samples, chunk):
            sl = slice(lo, lo + chunk)
            xs = x[sl]
            if algo == "rwm":
                y = xs + s * z[sl]
            else:
                y = xs + 0.5 * s * s * gx[sl] + s * z[sl]
            rho = log_mh_ratio_terms(xs, y, s, target, algo,
                                     log_x=lx[sl], grad_x=None if gx is None else gx[sl])
            acc.append(rho * rho)
        moments[i] = np.concatenate(acc).mean()
    slope, intercept = np.polyfit(np.log(sig), np.log(moments), 1)
    return DecayFit(float(slope), float(intercept), sig, moments, 2.0 * beta)


def autocorrelation(trace, max_lag: int, return_flag: bool = False):
    """Biased (1/N-normalized) sample autocorrelation for lags 0..max_lag.

    A constant trace has no defined ACF; it is reported as all ones with the
    zero-variance flag set.

    Raises:
        ValueError: trace shorter than 10 * max_lag.
    """
    x = np.asarray(trace, dtype=float)
    N = x.size
    if N < 10 * max_lag or N < 2:
        raise ValueError(f"trace of length {N} too short for max_lag={max_lag}")
    d = x - x.mean()
    c0 = float(d @ d) / N
    if c0 <= 0.0:
        acf = np.ones(max_lag + 1)
        return (acf, True) if return_flag else acf
    nfft = 1 << int(math.ceil(math.log2(2 * N)))
    f = np.fft.rfft(d, nfft)
    ac = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1] / N
    acf = ac / c0
    acf[0] = 1.0
    return (acf, False) if return_flag else acf
