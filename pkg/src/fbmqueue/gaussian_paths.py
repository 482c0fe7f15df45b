"""Exact sampling of fractional Brownian motion and the drifted field W_H.

Paths live on uniform grids starting at 0. The default sampler embeds the
fractional Gaussian noise covariance in a circulant matrix and draws the
increments with one FFT; when the embedding is not nonnegative definite the
covariance matrix of the path is factorized directly instead.
"""

import enum
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from ._validation import check_finite, check_hurst, check_positive
from .errors import ResourceCapError

logger = logging.getLogger(__name__)

#: relative threshold below which negative embedding eigenvalues are clipped
EIGEN_CLIP_TOL = 1e-10
#: largest path the dense fallback will factorize
DENSE_MAX_POINTS = 4096
#: largest grid any sampler accepts
MAX_GRID_POINTS = 2**22


class PathKind(enum.Enum):
    FBM = "fbm"
    W_FIELD = "w_field"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``start + k * step`` for ``k = 0 .. count - 1``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        check_finite(self.start, "start")
        check_positive(self.step, "step")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"count must be a positive integer, got {self.count}")
        if not math.isfinite(self.start + self.step * (self.count - 1)):
            raise ValueError("grid end is not finite")

    @classmethod
    def over(cls, length, step):
        """Grid on ``[0, length]``; ``length`` is rounded to a whole number of steps."""
        check_positive(step, "step")
        n = int(round(check_finite(length, "length") / step))
        return cls(0.0, float(step), max(n, 0) + 1)

    @property
    def times(self):
        return self.start + self.step * np.arange(self.count)

    @property
    def end(self):
        return self.start + self.step * (self.count - 1)

    def index_range(self, a, b):
        """Slice of grid indices ``i`` with ``a < t_i <= b``."""
        eps = 1e-9
        lo = math.floor((a - self.start) / self.step + eps) + 1
        hi = math.floor((b - self.start) / self.step + eps) + 1
        return slice(max(lo, 0), min(hi, self.count))


@dataclass(frozen=True)
class GaussianPath:
    grid: TimeGrid
    values: np.ndarray
    kind: PathKind = PathKind.FBM

    def __post_init__(self):
        if len(self.values) != self.grid.count:
            raise ValueError(
                f"values length {len(self.values)} does not match grid count {self.grid.count}"
            )

    @property
    def times(self):
        return self.grid.times

    def to_csv(self, path_or_buf):
        _write_two_columns(path_or_buf, ("t", "value"), self.times, self.values)


def fbm_covariance(s, t, H):
    """Cov(B_H(s), B_H(t)) = (|s|^2H + |t|^2H - |t - s|^2H) / 2."""
    H = check_hurst(H)
    s = check_finite(s, "s")
    t = check_finite(t, "t")
    two_h = 2.0 * H
    return 0.5 * (abs(s) ** two_h + abs(t) ** two_h - abs(t - s) ** two_h)


def fbm_covariance_matrix(times, H):
    H = check_hurst(H)
    t = np.asarray(times, dtype=float)
    two_h = 2.0 * H
    a = np.abs(t) ** two_h
    return 0.5 * (a[:, None] + a[None, :] - np.abs(t[:, None] - t[None, :]) ** two_h)


def fgn_autocovariance(n_lags, H):
    """Autocovariance of unit-step fractional Gaussian noise at lags 0..n_lags."""
    k = np.arange(n_lags + 1, dtype=float)
    two_h = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** two_h - 2 * k**two_h + np.abs(k - 1) ** two_h)


@lru_cache(maxsize=32)
def _circulant_scale(n_inc, H):
    """sqrt(eigenvalues / M) of the circulant embedding, or None if it is indefinite."""
    gamma = fgn_autocovariance(n_inc, H)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    top = eig.max()
    low = eig.min()
    if low < -EIGEN_CLIP_TOL * top:
        logger.info("circulant embedding indefinite (min eig %.3g); using dense factorization", low)
        return None
    if low < 0:
        warnings.warn(
            f"clipping circulant eigenvalues down to {low:.3g} (relative {low / top:.2g})",
            RuntimeWarning,
            stacklevel=3,
        )
        eig = np.clip(eig, 0.0, None)
    scale = np.sqrt(eig / row.size)
    scale.setflags(write=False)
    return scale


@lru_cache(maxsize=8)
def _dense_factor(count, step, H):
    times = step * np.arange(1, count)
    cov = fbm_covariance_matrix(times, H)
    try:
        factor = scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        factor = v * np.sqrt(np.clip(w, 0.0, None))
    factor.setflags(write=False)
    return factor


def _check_grid(grid):
    if grid.start != 0:
        raise ValueError(f"fBm grids must start at 0, got start={grid.start}")
    if grid.count > MAX_GRID_POINTS:
        raise ResourceCapError(f"grid of {grid.count} points exceeds cap {MAX_GRID_POINTS}")


def sample_fbm_batch(grid, H, rngs, method="auto"):
    """Draw one fBm path per generator in ``rngs``; returns shape ``(len(rngs), count)``.

    Each generator is consumed by its own path only, so row ``i`` depends on
    ``rngs[i]`` alone.

    Parameters
    ----------
    grid : TimeGrid
        Uniform grid starting at 0.
    H : float
        Hurst index in (0, 1).
    rngs : sequence of numpy.random.Generator
    method : {"auto", "circulant", "dense"}
        ``"auto"`` uses independent increments for H = 1/2, circulant
        embedding otherwise, and the dense factorization when the embedding
        fails.
    """
    H = check_hurst(H)
    _check_grid(grid)
    m = len(rngs)
    n_inc = grid.count - 1
    out = np.zeros((m, grid.count))
    if n_inc == 0 or m == 0:
        return out

    if method not in ("auto", "circulant", "dense"):
        raise ValueError(f"unknown method {method!r}")

    if method == "auto" and H == 0.5:
        sd = math.sqrt(grid.step)
        for i, rng in enumerate(rngs):
            np.cumsum(rng.standard_normal(n_inc) * sd, out=out[i, 1:])
        return out

    scale = None if method == "dense" else _circulant_scale(n_inc, H)
    if scale is None:
        if method == "circulant":
            raise np.linalg.LinAlgError("circulant embedding is not nonnegative definite")
        if grid.count > DENSE_MAX_POINTS:
            raise ResourceCapError(
                f"dense fBm factorization limited to {DENSE_MAX_POINTS} points, got {grid.count}"
            )
        factor = _dense_factor(grid.count, grid.step, H)
        z = np.stack([rng.standard_normal(n_inc) for rng in rngs])
        out[:, 1:] = z @ factor.T
        return out

    size = scale.size
    z = np.empty((m, size), dtype=complex)
    for i, rng in enumerate(rngs):
        pair = rng.standard_normal(2 * size)
        z[i].real = pair[:size]
        z[i].imag = pair[size:]
    noise = np.fft.fft(z * scale, axis=1).real[:, :n_inc]
    noise *= grid.step**H
    np.cumsum(noise, axis=1, out=out[:, 1:])
    return out


def sample_fbm(grid, H, rng, method="auto"):
    """One exact draw of ``(B_H(t_k))_k`` on ``grid``."""
    values = sample_fbm_batch(grid, H, [rng], method=method)[0]
    return GaussianPath(grid, values, PathKind.FBM)


def w_from_fbm(fbm_values, times, H):
    """W_H(t) = sqrt(2) B_H(t) - |t|^2H, applied along the last axis."""
    return math.sqrt(2.0) * np.asarray(fbm_values) - np.abs(times) ** (2.0 * H)


def sample_w_batch(grid, H, rngs, method="auto"):
    return w_from_fbm(sample_fbm_batch(grid, H, rngs, method), grid.times, H)


def sample_w_path(grid, H, rng, method="auto"):
    """One draw of the drifted field W_H on ``grid``."""
    fbm = sample_fbm(grid, H, rng, method)
    return GaussianPath(grid, w_from_fbm(fbm.values, grid.times, H), PathKind.W_FIELD)


def _write_two_columns(path_or_buf, header, col_a, col_b):
    lines = [",".join(header)]
    lines.extend(f"{a:.17g},{b:.17g}" for a, b in zip(col_a, col_b))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
