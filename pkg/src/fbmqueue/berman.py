"""Monte Carlo estimators of the Pickands and generalized Berman-type constants.

All Berman-type constants are integrals ``int e^z P(event(z)) dz`` whose
events are monotone in the level ``z``. Per path the integral collapses to
``exp(z*)`` with ``z*`` the level at which the sojourn requirement stops
holding, so each replicate contributes one exponential of a sojourn level.
"""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ._validation import (
    check_finite,
    check_hurst,
    check_nonnegative,
    check_positive,
    check_reps,
    check_seed,
)
from .estimate import MonteCarloEstimate, batch_means_se
from .gaussian_paths import TimeGrid, sample_w_batch
from .rng import STREAM_V_POOL, STREAM_W_PATH, chunk_for, replicate_generators, run_replicates
from .workload import NEG_INFINITY, sojourn_levels

PICKANDS_METHODS = ("tilted", "plain")


@dataclass(frozen=True)
class BermanSpec:
    """Parameters of the joint constant: conditioning window ``[0, T1]`` at
    duration ``x``, target window ``[T2, T3]`` at duration ``y``, level shift ``lam``."""

    H: float
    T1: float
    lam: float
    T2: float
    T3: float
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        check_hurst(self.H)
        check_positive(self.T1, "T1")
        check_finite(self.lam, "lam")
        check_nonnegative(self.T2, "T2")
        check_finite(self.T3, "T3")
        if self.T3 <= self.T2:
            raise ValueError(f"need T3 > T2, got T2={self.T2}, T3={self.T3}")
        check_nonnegative(self.x, "x")
        check_nonnegative(self.y, "y")

    @property
    def in_zero_region(self):
        """True when the constant vanishes identically (x >= T1 or y >= T3 - T2)."""
        return self.x >= self.T1 or self.y >= self.T3 - self.T2

    @property
    def horizon(self):
        return max(self.T1, self.T3)

    def params(self):
        return {
            "H": self.H, "T1": self.T1, "lam": self.lam, "T2": self.T2,
            "T3": self.T3, "x": self.x, "y": self.y,
        }


def default_constant_step(T2=None):
    """min(0.01, T2 / 50), so the target window holds at least 50 points."""
    if T2 is None or T2 <= 0:
        return 0.01
    return min(0.01, T2 / 50.0)


# ---------------------------------------------------------------------------
# Berman-type constants
# ---------------------------------------------------------------------------


def _single_block(H, T1, x, step, seed, start, stop):
    grid = TimeGrid.over(T1, step)
    w = sample_w_batch(grid, H, replicate_generators(seed, start, stop, STREAM_W_PATH))
    return sojourn_levels(w[:, grid.index_range(0.0, T1)], step, x)


def _joint_block(spec, step, seed, start, stop):
    grid = TimeGrid.over(spec.horizon, step)
    w = sample_w_batch(grid, spec.H, replicate_generators(seed, start, stop, STREAM_W_PATH))
    z1 = sojourn_levels(w[:, grid.index_range(0.0, spec.T1)], step, spec.x)
    z2 = sojourn_levels(w[:, grid.index_range(spec.T2, spec.T3)], step, spec.y)
    return np.column_stack([z1, z2])


def bar_single_levels(H, T1, x, step, reps, seed, workers=1):
    """Per-replicate sojourn levels of W_H on ``(0, T1]`` at duration ``x``."""
    H = check_hurst(H)
    T1 = check_positive(T1, "T1")
    x = check_nonnegative(x, "x")
    step = check_positive(step, "step")
    func = partial(_single_block, H, T1, x, step, check_seed(seed))
    return run_replicates(func, check_reps(reps), chunk_for(T1 / step), workers)


def bar_joint_levels(spec, step, reps, seed, workers=1):
    """Per-replicate pairs ``(z1*, z2*)`` from one W_H path each; shape ``(reps, 2)``."""
    step = check_positive(step, "step")
    func = partial(_joint_block, spec, step, check_seed(seed))
    return run_replicates(func, check_reps(reps), chunk_for(spec.horizon / step), workers)


def bar_single_samples(H, T1, x, step, reps, seed, workers=1):
    """Replicate values ``exp(z*)``; exactly zero when ``x >= T1``."""
    if x >= T1:
        return np.zeros(check_reps(reps))
    return np.exp(bar_single_levels(H, T1, x, step, reps, seed, workers))


def bar_joint_samples(spec, step, reps, seed, workers=1):
    """Replicate values ``exp(min(z1*, z2* - lam))``; exactly zero in the zero region."""
    if spec.in_zero_region:
        return np.zeros(check_reps(reps))
    z = bar_joint_levels(spec, step, reps, seed, workers)
    return np.exp(np.minimum(z[:, 0], z[:, 1] - spec.lam))


def estimate_bar_single(H, T1, x, step, reps, seed, workers=1):
    """Single Berman-type constant of W_H on ``[0, T1]`` at sojourn duration ``x``."""
    samples = bar_single_samples(H, T1, x, step, reps, seed, workers)
    notes = []
    if x >= T1:
        notes.append("x >= T1: constant is identically 0")
    return MonteCarloEstimate.from_samples(
        samples, seed=seed, step=step, kind="bar_single",
        params={"H": H, "T1": T1, "x": x}, notes=notes,
    )


def estimate_bar_joint(spec, step, reps, seed, workers=1):
    """Joint Berman-type constant; both windows are read off the same W_H path."""
    samples = bar_joint_samples(spec, step, reps, seed, workers)
    notes = ["x >= T1 or y >= T3 - T2: constant is identically 0"] if spec.in_zero_region else []
    return MonteCarloEstimate.from_samples(
        samples, seed=seed, step=step, kind="bar_joint", params=spec.params(), notes=notes
    )


# ---------------------------------------------------------------------------
# Pickands constant
# ---------------------------------------------------------------------------


def _tilted_ratio(w):
    # max_k e^{w_k} / mean_k e^{w_k}, row-wise and overflow-free
    top = w.max(axis=1, keepdims=True)
    return 1.0 / np.exp(w - top).mean(axis=1)


def _tilt_shift(times, index, H):
    """2 Cov(B_H(t), B_H(t_J)) for every grid time t, one row per index J."""
    tj = times[index][:, None]
    two_h = 2.0 * H
    return np.abs(times) ** two_h + np.abs(tj) ** two_h - np.abs(times - tj) ** two_h


def _pickands_block(H, S, step, method, seed, stream, start, stop):
    grid = TimeGrid.over(S, step)
    rngs = replicate_generators(seed, start, stop, stream)
    w = sample_w_batch(grid, H, rngs)
    if method == "plain":
        return np.exp(w.max(axis=1))
    index = np.array([rng.integers(grid.count) for rng in rngs])
    w += _tilt_shift(grid.times, index, H)
    return _tilted_ratio(w)


def pickands_samples(H, S, step, reps, seed, method="tilted", workers=1, stream=STREAM_V_POOL):
    """Replicate values whose mean is E[exp(V_H(S))] on the grid.

    ``"plain"`` returns ``exp(max_k W_H(t_k))`` directly. ``"tilted"`` draws a
    grid index J uniformly, shifts the path by ``2 Cov(B_H(.), B_H(t_J))``
    (the law of W_H under the density ``exp(W_H(t_J))``) and returns
    ``max_k e^{W_k} / mean_k e^{W_k}``. Both have the same expectation; the
    plain values are heavy tailed with mean growing linearly in ``S``, so its
    sample mean badly underestimates for large ``S``.
    """
    H = check_hurst(H)
    S = check_positive(S, "S")
    step = check_positive(step, "step")
    if method not in PICKANDS_METHODS:
        raise ValueError(f"method must be one of {PICKANDS_METHODS}, got {method!r}")
    func = partial(_pickands_block, H, S, step, method, check_seed(seed), stream)
    return run_replicates(func, check_reps(reps), chunk_for(S / step), workers)


def estimate_pickands(H, S, step, reps, seed, method="tilted", workers=1):
    """Estimate the Pickands constant H_{2H} by E[exp(V_H(S))] / S.

    Finite ``S`` biases upward (the ratio decreases to its limit) and the grid
    maximum biases downward.
    """
    samples = pickands_samples(H, S, step, reps, seed, method, workers)
    notes = [
        f"method={method}",
        "finite S overestimates; grid maximum underestimates",
        f"batch-means SE {batch_means_se(samples) / S:.3g}",
    ]
    if method == "plain":
        notes.append("plain replicates are heavy tailed; convergence is very slow")
    return MonteCarloEstimate.from_samples(
        samples, seed=seed, step=step, kind="pickands",
        params={"H": H, "S": S}, notes=notes, scale=1.0 / S,
    )


def _alpha2_block(S, step, method, seed, start, stop):
    grid = TimeGrid.over(S, step)
    t = grid.times
    rngs = replicate_generators(seed, start, stop, STREAM_V_POOL)
    slope = np.array([rng.standard_normal() for rng in rngs])
    w = math.sqrt(2.0) * slope[:, None] * t - t * t
    if method == "plain":
        return np.exp(w.max(axis=1))
    index = np.array([rng.integers(grid.count) for rng in rngs])
    w += 2.0 * t[index][:, None] * t
    return _tilted_ratio(w)


def estimate_pickands_alpha2(S, step, reps, seed, method="tilted", workers=1):
    """Validation path for the exponent-2 case, whose constant is 1/sqrt(pi).

    The field is ``sqrt(2) t N - t^2`` with one standard normal ``N`` per path,
    built directly since H = 1 is not an admissible Hurst index.
    """
    S = check_positive(S, "S")
    step = check_positive(step, "step")
    if method not in PICKANDS_METHODS:
        raise ValueError(f"method must be one of {PICKANDS_METHODS}, got {method!r}")
    func = partial(_alpha2_block, S, step, method, check_seed(seed))
    samples = run_replicates(func, check_reps(reps), chunk_for(S / step), workers)
    return MonteCarloEstimate.from_samples(
        samples, seed=seed, step=step, kind="pickands_alpha2",
        params={"alpha": 2.0, "S": S}, notes=[f"method={method}"], scale=1.0 / S,
    )


# ---------------------------------------------------------------------------
# Finite-horizon joint constant
# ---------------------------------------------------------------------------


def finite_horizon_pools(spec, S, step, reps, seed, method="tilted", workers=1):
    """Independent replicate pools: E[exp(V_H(S))] values and joint-constant values."""
    v_pool = pickands_samples(spec.H, S, step, reps, seed, method, workers, STREAM_V_POOL)
    joint_pool = bar_joint_samples(spec, step, reps, seed, workers)
    return v_pool, joint_pool


def estimate_finite_horizon_joint(spec, S, step, reps, seed, method="tilted", workers=1):
    """Finite-horizon constant over ``[0, S]`` from two independent pools.

    The level shift by the independent ``V_H(S)`` factors the constant into
    ``E[exp(V_H(S))] * E[exp(min(z1*, z2* - lam))]``. The estimate is the
    average over all pairs of the two pools, i.e. the product of pool means.
    """
    S = check_positive(S, "S")
    params = dict(spec.params(), S=S)
    if spec.in_zero_region:
        return MonteCarloEstimate(0.0, 0.0, check_reps(reps), seed, step,
                                  "finite_horizon_joint", params,
                                  ("x >= T1 or y >= T3 - T2: constant is identically 0",))
    v_pool, joint_pool = finite_horizon_pools(spec, S, step, reps, seed, method, workers)
    n = v_pool.size
    mv, mj = v_pool.mean(), joint_pool.mean()
    sv = v_pool.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    sj = joint_pool.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    se = math.sqrt((mj * sv) ** 2 + (mv * sj) ** 2 + (sv * sj) ** 2)
    return MonteCarloEstimate(
        float(mv * mj), float(se), n, seed, step, "finite_horizon_joint", params,
        (f"method={method}", "product of independent pool means"),
    )


__all__ = [
    "NEG_INFINITY",
    "BermanSpec",
    "default_constant_step",
    "bar_single_levels",
    "bar_joint_levels",
    "bar_single_samples",
    "bar_joint_samples",
    "estimate_bar_single",
    "estimate_bar_joint",
    "pickands_samples",
    "estimate_pickands",
    "estimate_pickands_alpha2",
    "finite_horizon_pools",
    "estimate_finite_horizon_joint",
]
