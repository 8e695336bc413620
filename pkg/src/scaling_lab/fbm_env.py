"""Two-sided fractional Brownian motion on a uniform grid.

Paths are frozen random environments: a Hurst exponent, a grid that has a
node exactly at x=0, and node values with B(0)=0.  Between nodes the path is
the piecewise-linear interpolant.

Two generators are provided.  ``sample_fbm_cholesky`` factorizes the exact
covariance restricted to the non-zero nodes and is the reference for small
grids.  ``sample_fbm_circulant`` draws fractional Gaussian noise (the
stationary increments) by circulant embedding and sums it outwards from the
zero node, which reproduces the two-sided covariance exactly and scales to
10^6 nodes.

Normal variates come from numpy's ``PCG64`` bit generator through
``Generator.standard_normal`` (ziggurat method); paths are bit-identical for a
fixed (grid, H, seed) on a given numpy version.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

__all__ = [
    "GridSpec",
    "FbmPath",
    "FbmError",
    "fbm_covariance",
    "fbm_covariance_matrix",
    "sample_fbm_cholesky",
    "sample_fbm_cholesky_batch",
    "sample_fbm_circulant",
    "sample_fbm_circulant_batch",
    "fgn_autocovariance",
    "eval_path",
    "save_path_csv",
    "load_path_csv",
]

CHOLESKY_MAX_POINTS = 4096
CHOLESKY_JITTER = 1e-12
CIRCULANT_EIG_TOL = 1e-8
_BATCH_CHUNK = 16384


class FbmError(RuntimeError):
    """Raised when a generator cannot produce a valid path."""


def _check_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst exponent must lie in (0, 1), got {H}")
    return H


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [x_min, x_max] with a node exactly at zero."""

    x_min: float
    x_max: float
    num_points: int

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ValueError(f"grid must straddle zero, got [{self.x_min}, {self.x_max}]")
        if self.num_points < 3:
            raise ValueError("grid needs at least 3 points")
        u = -self.x_min / self.spacing
        if abs(u - round(u)) > 1e-6:
            raise ValueError(
                f"x=0 is not a grid node for {self!r}; use GridSpec.snapped()"
            )

    @classmethod
    def snapped(cls, x_min: float, x_max: float, num_points: int, max_tries: int = 100000) -> "GridSpec":
        """Smallest grid with at least ``num_points`` nodes that has a node at 0."""
        n = max(int(num_points), 3)
        for k in range(max_tries):
            m = n + k
            u = -x_min * (m - 1) / (x_max - x_min)
            if abs(u - round(u)) < 1e-9:
                return cls(float(x_min), float(x_max), m)
        raise ValueError(f"cannot place a node at zero on [{x_min}, {x_max}]")

    @classmethod
    def symmetric(cls, half_width: float, num_points: int) -> "GridSpec":
        """Grid on [-half_width, half_width]; an even count is bumped by one."""
        n = int(num_points)
        if n % 2 == 0:
            n += 1
        return cls(-float(half_width), float(half_width), n)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.num_points - 1)

    @property
    def zero_index(self) -> int:
        return int(round(-self.x_min / self.spacing))

    def nodes(self) -> np.ndarray:
        x = (np.arange(self.num_points) - self.zero_index) * self.spacing
        x[0], x[-1] = self.x_min, self.x_max
        return x


@dataclass(frozen=True, eq=False)
class FbmPath:
    """A frozen fBM realization on ``grid``; ``values[grid.zero_index] == 0``."""

    hurst: float
    grid: GridSpec
    values: np.ndarray
    seed: int
    method: str = "circulant"
    _nodes: np.ndarray = field(init=False, repr=False)
    _slopes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_hurst(self.hurst)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.num_points,):
            raise ValueError("one value per grid node required")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        if v[self.grid.zero_index] != 0.0:
            raise ValueError("path must vanish at x=0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        nodes = self.grid.nodes()
        nodes.setflags(write=False)
        object.__setattr__(self, "_nodes", nodes)
        slopes = np.diff(v) / self.grid.spacing
        slopes.setflags(write=False)
        object.__setattr__(self, "_slopes", slopes)

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    def __call__(self, x):
        return eval_path(self, x)

    def interp(self, x) -> np.ndarray:
        """Linear interpolation without range checks (callers validate).

        The grid is uniform, so the segment index is computed directly
        instead of by binary search.
        """
        g = self.grid
        u = (np.asarray(x, dtype=float) - g.x_min) / g.spacing
        k = np.clip(u.astype(np.intp), 0, g.num_points - 2)
        return self.values[k] + self._slopes[k] * (u - k) * g.spacing


def fbm_covariance(x, y, H: float):
    """E[B_x B_y] = (|x|^2H + |y|^2H - |x-y|^2H) / 2; broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h2 = 2.0 * H
    out = 0.5 * (np.abs(x) ** h2 + np.abs(y) ** h2 - np.abs(x - y) ** h2)
    return float(out) if out.ndim == 0 else out


def fbm_covariance_matrix(points, H: float) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    return fbm_covariance(p[:, None], p[None, :], H)


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _chunks(size: int) -> Iterator[int]:
    left = size
    while left > 0:
        step = min(left, _BATCH_CHUNK)
        yield step
        left -= step


def sample_fbm_cholesky_batch(grid: GridSpec, H: float, size: int, seed: int) -> np.ndarray:
    """``size`` independent paths as rows of an array, via dense Cholesky.

    The zero node is left out of the factorized system and pinned to 0.

    Raises:
        ValueError: grid larger than ``CHOLESKY_MAX_POINTS``.
        FbmError: covariance not positive definite even after jitter.
    """
    H = _check_hurst(H)
    if grid.num_points > CHOLESKY_MAX_POINTS:
        raise ValueError(f"dense Cholesky limited to {CHOLESKY_MAX_POINTS} nodes")
    i0 = grid.zero_index
    pts = np.delete(grid.nodes(), i0)
    cov = fbm_covariance_matrix(pts, H)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(cov + CHOLESKY_JITTER * np.eye(len(pts)))
        except np.linalg.LinAlgError as exc:
            raise FbmError(
                f"fBM covariance not positive definite on {grid!r} with H={H}"
            ) from exc
    rng = _rng(seed)
    out = np.empty((size, grid.num_points))
    row = 0
    for step in _chunks(size):
        z = rng.standard_normal((step, len(pts)))
        vals = z @ L.T
        out[row:row + step, :i0] = vals[:, :i0]
        out[row:row + step, i0] = 0.0
        out[row:row + step, i0 + 1:] = vals[:, i0:]
        row += step
    return out


def sample_fbm_cholesky(grid: GridSpec, H: float, seed: int) -> FbmPath:
    values = sample_fbm_cholesky_batch(grid, H, 1, seed)[0]
    return FbmPath(H, grid, values, int(seed), method="cholesky")


def fgn_autocovariance(lags, H: float, spacing: float = 1.0) -> np.ndarray:
    """Autocovariance of fBM increments over steps of length ``spacing``."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * H
    return 0.5 * spacing**h2 * ((k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def _circulant_sqrt_eigs(m: int, H: float) -> np.ndarray:
    """sqrt(eigenvalues / M) of the minimal circulant embedding of unit-step fGn."""
    gamma = fgn_autocovariance(np.arange(m + 1), H)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -CIRCULANT_EIG_TOL:
        raise FbmError(
            f"circulant embedding has eigenvalue {lam.min():.3e} < -{CIRCULANT_EIG_TOL:g} "
            f"(H={H}, m={m}); try doubling the embedding length"
        )
    return np.sqrt(np.clip(lam, 0.0, None) / len(row))


def _increments_to_path(incr: np.ndarray, i0: int) -> np.ndarray:
    """Cumulative sums outward from node ``i0``; works on the last axis."""
    out = np.zeros(incr.shape[:-1] + (incr.shape[-1] + 1,))
    out[..., i0 + 1:] = np.cumsum(incr[..., i0:], axis=-1)
    if i0 > 0:
        out[..., :i0] = -np.cumsum(incr[..., :i0][..., ::-1], axis=-1)[..., ::-1]
    return out


def sample_fbm_circulant_batch(grid: GridSpec, H: float, size: int, seed: int) -> np.ndarray:
    """``size`` independent paths as rows, via circulant-embedded fGn."""
    H = _check_hurst(H)
    m = grid.num_points - 1
    sq = _circulant_sqrt_eigs(m, H)
    scale = grid.spacing**H
    rng = _rng(seed)
    out = np.empty((size, grid.num_points))
    row = 0
    for step in _chunks(size):
        z = rng.standard_normal((step, 2, len(sq)))
        w = np.fft.fft(sq * (z[:, 0] + 1j * z[:, 1]), axis=-1)
        incr = scale * w.real[:, :m]
        out[row:row + step] = _increments_to_path(incr, grid.zero_index)
        row += step
    return out


def sample_fbm_circulant(grid: GridSpec, H: float, seed: int) -> FbmPath:
    values = sample_fbm_circulant_batch(grid, H, 1, seed)[0]
    values[grid.zero_index] = 0.0
    return FbmPath(H, grid, values, int(seed), method="circulant")


def eval_path(path: FbmPath, x):
    """Piecewise-linear interpolation of the node values.

    Raises:
        ValueError: any ``x`` outside [x_min, x_max].
    """
    xa = np.asarray(x, dtype=float)
    g = path.grid
    if np.any(xa < g.x_min) or np.any(xa > g.x_max) or np.any(np.isnan(xa)):
        raise ValueError(f"x outside path domain [{g.x_min}, {g.x_max}]")
    out = path.interp(xa)
    return float(out) if out.ndim == 0 else out


def save_path_csv(path: FbmPath, filename) -> None:
    filename = Path(filename)
    with filename.open("w") as fh:
        fh.write(f"# hurst={path.hurst!r} seed={path.seed} method={path.method} "
                 f"x_min={path.grid.x_min!r} x_max={path.grid.x_max!r} "
                 f"num_points={path.grid.num_points}\n")
        fh.write("x,value\n")
        for x, v in zip(path.nodes, path.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def load_path_csv(filename) -> FbmPath:
    """Inverse of :func:`save_path_csv`.  The grid is rebuilt from the header."""
    filename = Path(filename)
    with filename.open() as fh:
        first = fh.readline().strip()
        if not first.startswith("#"):
            raise ValueError(f"{filename}: missing '# hurst=... seed=...' metadata line")
        meta = dict(kv.split("=", 1) for kv in first[1:].split())
        header = fh.readline().strip()
        if header != "x,value":
            raise ValueError(f"{filename}: expected header 'x,value', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    xs, vals = data[:, 0], data[:, 1]
    if "x_min" in meta:
        grid = GridSpec(float(meta["x_min"]), float(meta["x_max"]), int(meta["num_points"]))
    else:
        grid = GridSpec(float(xs[0]), float(xs[-1]), len(xs))
    if len(xs) != grid.num_points or not np.allclose(xs, grid.nodes(), rtol=0, atol=1e-12 * max(1.0, grid.x_max - grid.x_min)):
        raise ValueError(f"{filename}: node coordinates do not form the declared grid")
    return FbmPath(float(meta["hurst"]), grid, vals, int(meta["seed"]),
                   method=meta.get("method", "circulant"))
