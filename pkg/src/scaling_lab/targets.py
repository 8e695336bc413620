"""One-dimensional marginal targets for product-form chains.

A :class:`MarginalTarget` bundles an unnormalized log-density on a bounded
domain (log-density is -inf outside), optional first and second derivatives of
the potential, and, once :func:`normalize_and_tabulate` has run, a
normalizing constant plus an inverse-CDF table for exact stationary draws.

Rough targets are built from an :class:`~scaling_lab.fbm_env.FbmPath` and use
its piecewise-linear interpolant everywhere, so the density being sampled is
exactly the one being evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .fbm_env import FbmPath, eval_path

__all__ = [
    "LocalisationParams",
    "OscParams",
    "MarginalTarget",
    "localisation",
    "build_rwm_rough",
    "build_mala_rough",
    "build_oscillatory",
    "build_gaussian",
    "normalize_and_tabulate",
    "phi_sq_integral",
    "DEFAULT_C",
]

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
DEFAULT_C = 0.1
DEFAULT_RESOLUTION = 100_000

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LocalisationParams:
    c: float
    H: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("localisation parameter c must be positive")
        if not 0 < self.H < 1:
            raise ValueError("Hurst exponent must lie in (0, 1)")

    @property
    def radius(self) -> float:
        """|x| below which the localisation is identically 1."""
        return self.c ** (1.0 / (2.0 * self.H))


@dataclass(frozen=True)
class OscParams:
    a: float
    b: float

    def __post_init__(self):
        if self.b == 0:
            raise ValueError("oscillation frequency b must be non-zero")


def localisation(x, params: LocalisationParams):
    """min(1, c^(3/2H) |x|^-3), equal to 1 on |x| <= c^(1/2H)."""
    xa = np.abs(np.asarray(x, dtype=float))
    r = params.radius
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(xa <= r, 1.0, (r / np.where(xa > 0, xa, 1.0)) ** 3)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MarginalTarget:
    """Unnormalized 1-D target; see module docstring.

    ``log_xi``, ``v_prime`` and ``v_second`` take arrays inside ``domain``.
    Table fields are populated by :func:`normalize_and_tabulate`.
    """

    kind: str
    domain: tuple[float, float]
    log_xi: ArrayFn
    v_prime: Optional[ArrayFn] = None
    v_second: Optional[ArrayFn] = None
    params: dict = field(default_factory=dict)
    log_xi_and_grad: Optional[Callable] = field(default=None, repr=False)
    table_nodes_hint: Optional[np.ndarray] = field(default=None, repr=False)
    norm_const: Optional[float] = None
    table_x: Optional[np.ndarray] = field(default=None, repr=False)
    table_pdf: Optional[np.ndarray] = field(default=None, repr=False)
    cdf_table: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def is_normalized(self) -> bool:
        return self.norm_const is not None

    @property
    def has_gradient(self) -> bool:
        return self.v_prime is not None

    def in_domain(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.domain[0]) & (x <= self.domain[1])

    def log_pi(self, x):
        if not self.is_normalized:
            raise ValueError("target not normalized; call normalize_and_tabulate first")
        return self.log_xi(x) - math.log(self.norm_const)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Inverse-CDF draws from the tabulated density.

        The table density is exp of the linear interpolant of the
        log-density between nodes, so a draw inside a cell solves
        p_k (e^(s t) - 1) / s = r in closed form.
        """
        if self.cdf_table is None:
            raise ValueError("target has no CDF table; call normalize_and_tabulate first")
        x, p, cum = self.table_x, self.table_pdf, self.cdf_table
        u = rng.random(size)
        k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(x) - 2)
        h = x[k + 1] - x[k]
        pk = p[k]
        r = np.maximum(u - cum[k], 0.0) * self.norm_const_table / pk
        s = np.log(p[k + 1] / pk) / h
        q = r * s
        # log1p(q)/q -> 1 as q -> 0
        safe = np.where(np.abs(q) > 1e-12, q, 1.0)
        ratio = np.where(np.abs(q) > 1e-12, np.log1p(np.maximum(safe, -1.0 + 1e-16)) / safe, 1.0 - 0.5 * q)
        return x[k] + np.clip(r * ratio, 0.0, h)

    @property
    def norm_const_table(self) -> float:
        # mass of the shifted table density (table_pdf is scaled to max 1)
        return self.params["_table_mass"]

    def describe(self) -> dict:
        """Plain key=value descriptor for provenance headers."""
        out = {"kind": self.kind}
        for key in ("H", "c", "a", "b", "seed", "grid_points"):
            if key in self.params:
                out[key] = self.params[key]
        out["domain"] = f"{self.domain[0]!r}:{self.domain[1]!r}"
        if self.norm_const is not None:
            out["norm_const"] = repr(self.norm_const)
        return out


def _check_in(path: FbmPath, x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    g = path.grid
    # the negated comparison also rejects NaN
    if xa.size and not (xa.min() >= g.x_min and xa.max() <= g.x_max):
        raise ValueError(f"x outside target domain [{g.x_min}, {g.x_max}]")
    return xa


def build_rwm_rough(path: FbmPath) -> MarginalTarget:
    """log xi(x) = B(x) - x^2/2 - log(2 pi)/2; no derivatives."""
    nodes = path.nodes

    def log_xi(x):
        xa = _check_in(path, x)
        out = path.interp(xa) - 0.5 * xa * xa - HALF_LOG_2PI
        return float(out) if out.ndim == 0 else out

    g = path.grid
    return MarginalTarget(
        kind="rwm_rough",
        domain=(g.x_min, g.x_max),
        log_xi=log_xi,
        params={"H": path.hurst, "seed": path.seed, "grid_points": g.num_points},
        table_nodes_hint=nodes,
    )


# Gauss-Legendre rule on [0, 1]; exact for degree 7, and the integrands below
# are a linear path segment times a smooth piece of the localisation.
_GL_T, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


class _LocalisedPathIntegrals:
    """I0(x) = int_0^x B(u) phi(u) du and I1(x) = int_0^x u B(u) phi(u) du.

    Node tables are cumulated outward from the zero node; off-node values add
    the exact partial-segment integral.  Segments are split at +-radius so
    the quadrature never straddles the kink of the localisation.
    """

    def __init__(self, path: FbmPath, params: LocalisationParams):
        self.path = path
        self.params = params
        self.nodes = np.array(path.nodes)
        self.vals = np.array(path.values)
        self.slopes = np.diff(self.vals) / np.diff(self.nodes)
        seg0, seg1 = self._segment(np.arange(len(self.nodes) - 1), self.nodes[:-1], self.nodes[1:])
        i0 = path.grid.zero_index
        self.I0 = np.zeros(len(self.nodes))
        self.I1 = np.zeros(len(self.nodes))
        self.I0[i0 + 1:] = np.cumsum(seg0[i0:])
        self.I1[i0 + 1:] = np.cumsum(seg1[i0:])
        if i0 > 0:
            self.I0[:i0] = -np.cumsum(seg0[:i0][::-1])[::-1]
            self.I1[:i0] = -np.cumsum(seg1[:i0][::-1])[::-1]

    def _piece(self, k, a, b):
        """GL integrals over [a, b] inside segment k where phi is smooth."""
        span = b - a
        u = a[..., None] + span[..., None] * _GL_T
        bu = self.vals[k][..., None] + self.slopes[k][..., None] * (u - self.nodes[k][..., None])
        f = bu * localisation(u, self.params)
        j0 = span * (f @ _GL_W)
        j1 = span * ((f * u) @ _GL_W)
        return j0, j1

    def _segment(self, k, a, b):
        r = self.params.radius
        j0 = np.zeros(np.shape(a))
        j1 = np.zeros(np.shape(a))
        lo = a
        for cut in (-r, r):
            hi = np.where((lo < cut) & (cut < b), cut, lo)
            p0, p1 = self._piece(k, lo, hi)
            j0 += p0
            j1 += p1
            lo = hi
        p0, p1 = self._piece(k, lo, b)
        return j0 + p0, j1 + p1

    def __call__(self, x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.clip(np.searchsorted(self.nodes, xa, side="right") - 1, 0, len(self.nodes) - 2)
        p0, p1 = self._segment(k, self.nodes[k], xa)
        return self.I0[k] + p0, self.I1[k] + p1


def build_mala_rough(path: FbmPath, params: LocalisationParams) -> MarginalTarget:
    """Second-order rough target: V''(x) = -1 + B(x) phi_c(x).

    log xi(x) = -x^2/2 + x I0(x) - I1(x) - log(2 pi)/2, V'(x) = -x + I0(x).
    """
    if abs(params.H - path.hurst) > 1e-12:
        raise ValueError("localisation H must match the path's Hurst exponent")
    ints = _LocalisedPathIntegrals(path, params)

    def _shape(x, out):
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    def log_xi(x):
        xa = _check_in(path, x)
        i0, i1 = ints(xa)
        xf = np.atleast_1d(xa)
        return _shape(x, -0.5 * xf * xf + xf * i0 - i1 - HALF_LOG_2PI)

    def v_prime(x):
        xa = _check_in(path, x)
        i0, _ = ints(xa)
        return _shape(x, -np.atleast_1d(xa) + i0)

    def v_second(x):
        xa = _check_in(path, x)
        out = -1.0 + eval_path(path, xa) * localisation(xa, params)
        return out

    def log_xi_and_grad(x):
        xa = _check_in(path, x)
        i0, i1 = ints(xa)
        xf = np.atleast_1d(xa)
        return (_shape(x, -0.5 * xf * xf + xf * i0 - i1 - HALF_LOG_2PI),
                _shape(x, -xf + i0))

    g = path.grid
    return MarginalTarget(
        kind="mala_rough",
        domain=(g.x_min, g.x_max),
        log_xi=log_xi,
        v_prime=v_prime,
        v_second=v_second,
        log_xi_and_grad=log_xi_and_grad,
        params={"H": path.hurst, "c": params.c, "seed": path.seed, "grid_points": g.num_points,
                "_localisation": params},
        table_nodes_hint=path.nodes,
    )


def build_oscillatory(kind: str, p: OscParams, domain: tuple[float, float] = (-9.0, 9.0)) -> MarginalTarget:
    """Deterministic oscillatory perturbations of the standard normal potential.

    ``rwm_osc``:  log xi = -x^2/2 + a cos(bx)
    ``mala_osc``: log xi = -x^2/2 - (a/b^2) cos(bx), with V' and V''.
    """
    a, b = float(p.a), float(p.b)
    if kind == "rwm_osc":
        def log_xi(x):
            x = np.asarray(x, dtype=float)
            return -0.5 * x * x + a * np.cos(b * x)

        def v_prime(x):
            x = np.asarray(x, dtype=float)
            return -x - a * b * np.sin(b * x)

        def v_second(x):
            x = np.asarray(x, dtype=float)
            return -1.0 - a * b * b * np.cos(b * x)
    elif kind == "mala_osc":
        def log_xi(x):
            x = np.asarray(x, dtype=float)
            return -0.5 * x * x - (a / (b * b)) * np.cos(b * x)

        def v_prime(x):
            x = np.asarray(x, dtype=float)
            return -x + (a / b) * np.sin(b * x)

        def v_second(x):
            x = np.asarray(x, dtype=float)
            return -1.0 + a * np.cos(b * x)
    else:
        raise ValueError(f"unknown oscillatory kind {kind!r}")
    return MarginalTarget(kind=kind, domain=tuple(map(float, domain)), log_xi=log_xi,
                          v_prime=v_prime, v_second=v_second, params={"a": a, "b": b})


def build_gaussian(domain: tuple[float, float] = (-9.0, 9.0)) -> MarginalTarget:
    """Standard normal marginal, the classical smooth control."""
    def log_xi(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x - HALF_LOG_2PI

    def v_prime(x):
        return -np.asarray(x, dtype=float)

    def v_second(x):
        return np.full(np.shape(x), -1.0)

    return MarginalTarget(kind="gaussian", domain=tuple(map(float, domain)), log_xi=log_xi,
                          v_prime=v_prime, v_second=v_second, params={})


def normalize_and_tabulate(target: MarginalTarget, resolution: int | None = None) -> MarginalTarget:
    """Normalizing constant and inverse-CDF table.

    The sampling table treats the log-density as linear between nodes, so
    each cell mass is exact, h p_k expm1(d)/d with d the log-density
    increment.  With ``resolution=None`` a path-based target is tabulated on
    its own grid, where this interpolant differs from the target only through
    the O(h^2) curvature of the Gaussian factor, and the same cell masses give
    ``norm_const``.  Otherwise a uniform table of ``resolution`` points over
    the domain is used and ``norm_const`` is the trapezoid rule, which is
    far more accurate than O(h^2) for smooth, rapidly decaying densities.

    Raises:
        ValueError: resolution below 1000, a non-finite log-density, or zero mass.
    """
    on_path_grid = resolution is None and target.table_nodes_hint is not None
    if on_path_grid:
        x = np.asarray(target.table_nodes_hint, dtype=float)
    else:
        resolution = DEFAULT_RESOLUTION if resolution is None else int(resolution)
        if resolution < 1000:
            raise ValueError("table resolution must be at least 1000")
        x = np.linspace(target.domain[0], target.domain[1], resolution)
    lx = np.asarray(target.log_xi(x), dtype=float)
    if not np.all(np.isfinite(lx)):
        raise ValueError("log-density is not finite on the domain")
    shift = lx.max()
    p = np.exp(lx - shift)
    if np.any(p <= 0):
        raise ValueError("table has an empty cell (density underflow)")
    d = np.diff(lx)
    small = np.abs(d) < 1e-12
    growth = np.where(small, 1.0 + 0.5 * d, np.expm1(d) / np.where(small, 1.0, d))
    cells = np.diff(x) * p[:-1] * growth
    cum = np.concatenate(([0.0], np.cumsum(cells)))
    mass = cum[-1]
    if not mass > 0:
        raise ValueError("target has zero mass on its domain")
    # cell masses are all positive; far-tail cdf values may still round to 1.0
    cdf = cum / mass
    norm_mass = mass if on_path_grid else float(trapezoid(p, x))
    params = dict(target.params, _table_mass=mass)
    return replace(target, norm_const=float(norm_mass * math.exp(shift)), table_x=x,
                   table_pdf=p, cdf_table=cdf, params=params)


def phi_sq_integral(target: MarginalTarget) -> float:
    """Value of int phi_c(x)^2 pi(x) dx for a normalized rough MALA target.

    Uses the table's log-linear cell masses with the cell average of phi_c^2,
    so a localisation that is identically one returns exactly one.
    """
    if target.kind != "mala_rough":
        raise ValueError("phi_sq_integral needs a mala_rough target")
    if not target.is_normalized:
        raise ValueError("target must be normalized first")
    loc = target.params["_localisation"]
    cells = np.diff(target.cdf_table)
    f = localisation(target.table_x, loc) ** 2
    return float(np.sum(cells * 0.5 * (f[:-1] + f[1:])))
