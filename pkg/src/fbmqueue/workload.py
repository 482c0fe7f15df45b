"""Workload process Q of the fBm-fed fluid queue and its sojourn functionals."""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from ._validation import as_1d_array, check_hurst, check_nonnegative, check_positive
from .errors import ResourceCapError
from .gaussian_paths import MAX_GRID_POINTS, GaussianPath, PathKind, TimeGrid, sample_fbm_batch

logger = logging.getLogger(__name__)

NEG_INFINITY = -math.inf

#: default horizon is this many multiples of u * t*
HORIZON_FACTOR = 8.0
#: emit a RuntimeWarning when the truncation tail bound exceeds this
HORIZON_WARN_BOUND = 1e-4
DEFAULT_MAX_POINTS = 2**20
DEFAULT_BASE_STEP = 2.0**-8


@dataclass(frozen=True)
class QueueParams:
    """Hurst index of the input and drain rate ``c`` of the queue."""

    hurst: float
    drain: float

    def __post_init__(self):
        check_hurst(self.hurst)
        check_positive(self.drain, "drain")

    @property
    def critical_time(self):
        """t* = H / (c (1 - H)), where the variance-scaled drift is extremal."""
        return self.hurst / (self.drain * (1.0 - self.hurst))


@dataclass(frozen=True)
class WorkloadPath:
    grid: TimeGrid
    values: np.ndarray
    truncation_horizon: float = math.inf

    def __post_init__(self):
        if len(self.values) != self.grid.count:
            raise ValueError("values length does not match grid")
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("workload values must be nonnegative")

    @property
    def times(self):
        return self.grid.times

    def to_csv(self, path_or_buf):
        from .gaussian_paths import _write_two_columns

        _write_two_columns(path_or_buf, ("t", "q"), self.times, self.values)


def default_horizon(params, u):
    """Truncation horizon ``8 u t*`` for a target level ``u``."""
    check_positive(u, "u")
    return HORIZON_FACTOR * u * params.critical_time


def horizon_tail_bound(params, u, horizon):
    """Crude one-point bound on the supremum being attained beyond ``horizon``.

    ``exp(-(u + c h)^2 / (2 h^{2H}))``; for ``h >= u t*`` this dominates every
    later time point.
    """
    h = check_positive(horizon, "horizon")
    z = (u + params.drain * h) / h**params.hurst
    return math.exp(-0.5 * z * z)


def warn_if_short_horizon(params, u, horizon):
    bound = horizon_tail_bound(params, u, horizon)
    logger.info("truncation horizon %.4g at u=%.4g: tail bound %.3g", horizon, u, bound)
    if bound > HORIZON_WARN_BOUND:
        warnings.warn(
            f"horizon {horizon:.4g} may truncate the supremum at u={u:.4g} "
            f"(tail bound {bound:.2g})",
            RuntimeWarning,
            stacklevel=3,
        )
    return bound


def default_step(total_length, max_points=DEFAULT_MAX_POINTS, base_step=DEFAULT_BASE_STEP):
    """``base_step``, coarsened only as needed to keep ``[0, total]`` within ``max_points``."""
    check_positive(total_length, "total_length")
    return max(base_step, total_length / (max_points - 1))


def _grid_counts(window_end, horizon, step):
    n_window = int(round(window_end / step)) + 1
    n_horizon = max(int(round(horizon / step)), 1)
    total = n_window + n_horizon
    if total > MAX_GRID_POINTS:
        raise ResourceCapError(f"workload grid needs {total} points, cap is {MAX_GRID_POINTS}")
    return n_window, n_horizon


def stationary_from_net_input(net_input, n_window, n_horizon):
    """Q(t_i) = max_{i <= j <= i + n_horizon} X_j - X_i for the first ``n_window`` points.

    ``net_input`` holds ``X = B - c t`` along its last axis.
    """
    x = np.asarray(net_input, dtype=float)
    size = n_horizon + 1
    ahead = maximum_filter1d(x, size=size, axis=-1, origin=-(size // 2), mode="nearest")
    q = ahead[..., :n_window] - x[..., :n_window]
    np.maximum(q, 0.0, out=q)
    return q


def stationary_window_batch(params, window_end, horizon, step, rngs):
    """Stationary workload on ``[0, window_end]`` for each generator; shape ``(m, n_window)``."""
    check_positive(window_end, "window_end")
    check_positive(horizon, "horizon")
    check_positive(step, "step")
    n_window, n_horizon = _grid_counts(window_end, horizon, step)
    grid = TimeGrid(0.0, step, n_window + n_horizon)
    b = sample_fbm_batch(grid, params.hurst, rngs)
    b -= params.drain * grid.times
    return stationary_from_net_input(b, n_window, n_horizon)


def simulate_stationary_window(params, window_end, horizon, step, rng):
    """Sample the stationary workload on ``[0, window_end]`` from a single fBm path.

    The supremum over ``s >= t`` is truncated to grid points in
    ``[t, t + horizon]``. Grid maxima sit below continuous suprema, so
    exceedance probabilities computed from the result are biased low.
    """
    values = stationary_window_batch(params, window_end, horizon, step, [rng])[0]
    n_window = values.size
    return WorkloadPath(TimeGrid(0.0, float(step), n_window), values, float(horizon))


def forward_from_net_input(net_input, q0):
    """Q_i = X_i + max(q0, -min_{j<=i} X_j) for ``X_0 = 0``, along the last axis."""
    x = np.asarray(net_input, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    running_min = np.minimum.accumulate(x, axis=-1)
    return x + np.maximum(q0[..., None], -running_min)


def simulate_forward(params, q0, driver):
    """Workload driven forward from ``Q(0) = q0`` by a given fBm path."""
    check_nonnegative(q0, "q0")
    if not isinstance(driver, GaussianPath) or driver.kind is not PathKind.FBM:
        raise ValueError("driver must be a GaussianPath of kind FBM")
    if driver.grid.start != 0 or driver.values[0] != 0:
        raise ValueError("driver must start at t=0 with value 0")
    x = driver.values - params.drain * driver.times
    q = forward_from_net_input(x, q0)
    np.maximum(q, 0.0, out=q)  # rounding only; exact arithmetic gives q >= 0
    return WorkloadPath(driver.grid, q)


def sojourn_time(path, level, interval):
    """Time the path spends strictly above ``level`` on the half-open ``(a, b]``.

    Computed as ``step * #{t_i : a < t_i <= b, value_i > level}``.
    """
    a, b = interval
    grid = path.grid
    tol = 1e-9 * grid.step
    if a < grid.start - tol or b > grid.end + tol or b < a:
        raise ValueError(f"interval {interval} is outside the grid [{grid.start}, {grid.end}]")
    sl = grid.index_range(a, b)
    values = np.asarray(path.values)[sl]
    return grid.step * int(np.count_nonzero(values > level))


def sojourn_times(values, level, step):
    """Batched sojourn: ``step * #(values > level)`` along the last axis."""
    return step * np.count_nonzero(np.asarray(values) > level, axis=-1)


def _rank_for_duration(x, step):
    # the 1e-9 absorbs x/step landing a hair below an integer
    return math.floor(x / step + 1e-9) + 1


def sojourn_level(values, step, x):
    """Highest level whose sojourn on the window exceeds ``x``.

    With ``m = floor(x / step) + 1`` this is the m-th largest value, or
    ``NEG_INFINITY`` when the window has fewer than ``m`` points.
    """
    values = as_1d_array(values, "values")
    if values.size == 0:
        raise ValueError("empty window")
    check_positive(step, "step")
    check_nonnegative(x, "x")
    m = _rank_for_duration(x, step)
    if m > values.size:
        return NEG_INFINITY
    return float(np.partition(values, values.size - m)[values.size - m])


def sojourn_levels(values, step, x):
    """Batched :func:`sojourn_level` along the last axis."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if n == 0:
        raise ValueError("empty window")
    m = _rank_for_duration(x, step)
    if m > n:
        return np.full(values.shape[:-1], NEG_INFINITY)
    return np.partition(values, n - m, axis=-1)[..., n - m]
