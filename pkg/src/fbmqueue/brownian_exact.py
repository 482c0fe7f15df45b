"""Closed forms for the Brownian-driven queue (H = 1/2) and the constant C(T1, T2, x; w).

The stationary workload is exponential with rate 2c, and the transient
exceedance probabilities given ``Q(0) = u`` or ``Q(0) > u`` are explicit in
terms of the standard normal distribution function.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.special import log_ndtr

from ._validation import (
    check_finite,
    check_level,
    check_nonnegative,
    check_positive,
    check_reps,
    check_seed,
)
from .asymptotics import normal_cdf
from .estimate import MonteCarloEstimate, require_params
from .gaussian_paths import TimeGrid, sample_fbm_batch
from .rng import DEFAULT_CHUNK, STREAM_C_PATH, replicate_generators, run_replicates
from .workload import sojourn_levels

logger = logging.getLogger(__name__)

#: replicates with 2c * Y* above this are dropped to avoid exp overflow
EXP_OVERFLOW_GUARD = 700.0


def stationary_tail(c, u):
    """P(Q(0) > u) = exp(-2 c u)."""
    c = check_positive(c, "c")
    u = check_nonnegative(u, "u")
    return math.exp(-2.0 * c * u)


@dataclass(frozen=True)
class BmTransientQuery:
    c: float
    u: float
    omega: float
    T: float

    def __post_init__(self):
        check_positive(self.c, "c")
        check_nonnegative(self.u, "u")
        check_nonnegative(self.omega, "omega")
        check_positive(self.T, "T")


def _checked_probability(p, name):
    assert -1e-12 <= p <= 1 + 1e-12, f"{name} evaluated to {p}, outside [0, 1]"
    return p


def transient_exceed_given_level(q):
    """P(Q(T) > omega | Q(0) = u) for the Brownian queue.

    ``Phi((u - omega - cT)/sqrt T) + exp(-2 c omega) Phi((cT - omega - u)/sqrt T)``.
    The second argument is ``cT - omega - u``; with the opposite sign the
    expression would tend to 0 instead of the stationary tail as T grows.
    """
    c, u, w, T = q.c, q.u, q.omega, q.T
    rt = math.sqrt(T)
    p = normal_cdf((u - w - c * T) / rt) + math.exp(-2 * c * w) * normal_cdf((c * T - w - u) / rt)
    return _checked_probability(p, "transient_exceed_given_level")


def transient_exceed_given_exceed(q):
    """P(Q(T) > omega | Q(0) > u) for the Brownian queue."""
    c, u, w, T = q.c, q.u, q.omega, q.T
    rt = math.sqrt(T)
    # exp(2uc) * Phi(.) and exp(-2c(w-u)) * Phi(.) can each be huge times tiny;
    # combine them in log space.
    first = _exp_times_cdf(2 * u * c, (-w - u - c * T) / rt)
    second = _exp_times_cdf(-2 * c * (w - u), (w - u - c * T) / rt)
    p = (
        -first
        + second
        + normal_cdf((u - w - c * T) / rt)
        + math.exp(-2 * c * w) * normal_cdf((c * T - w - u) / rt)
    )
    return _checked_probability(p, "transient_exceed_given_exceed")


def _exp_times_cdf(log_factor, z):
    return math.exp(log_factor + float(log_ndtr(z)))


def sample_conditional_initial(c, u, rng):
    """Exact draw of Q(0) given Q(0) > u: ``u`` plus an Exp(2c) overshoot."""
    c = check_positive(c, "c")
    u = check_nonnegative(u, "u")
    return u + rng.exponential(1.0 / (2.0 * c))


@dataclass(frozen=True)
class CConstantSpec:
    """Parameters of C(T1, T2, x; w); ``w = math.inf`` is the unbounded variant."""

    T1: float
    T2: float
    x: float
    w: float
    c: float

    def __post_init__(self):
        check_nonnegative(self.T1, "T1")
        check_finite(self.T2, "T2")
        if self.T2 <= self.T1:
            raise ValueError(f"need T2 > T1, got T1={self.T1}, T2={self.T2}")
        check_nonnegative(self.x, "x")
        check_level(self.w, "w")
        check_positive(self.c, "c")

    def params(self):
        return {"T1": self.T1, "T2": self.T2, "x": self.x, "w": self.w, "c": self.c}


def _drifted_window(spec, step):
    grid = TimeGrid.over(spec.T2, step)
    return grid, grid.index_range(spec.T1, spec.T2)


def _c_constant_block(spec, step, seed, start, stop):
    grid, window = _drifted_window(spec, step)
    rngs = replicate_generators(seed, start, stop, STREAM_C_PATH)
    x = sample_fbm_batch(grid, 0.5, rngs)
    x -= spec.c * grid.times
    return sojourn_levels(x[:, window], step, spec.x)


def c_constant_levels(spec, step, reps, seed, workers=1, chunk_size=DEFAULT_CHUNK):
    """Per-replicate sojourn levels Y* of ``B(t) - c t`` on ``(T1, T2]`` at duration ``x``."""
    check_positive(step, "step")
    func = partial(_c_constant_block, spec, float(step), check_seed(seed))
    return run_replicates(func, check_reps(reps), chunk_size, workers)


def estimate_C(spec, step, reps, seed, workers=1):
    """Monte Carlo estimate of C(T1, T2, x; w) = E[exp(2c min(Y*, w))].

    ``Y*`` is the highest level whose sojourn time of ``B(t) - c t`` over
    ``(T1, T2]`` exceeds ``x``. Returns exactly 0 when ``x >= T2 - T1``.
    """
    reps = check_reps(reps)
    seed = check_seed(seed)
    params = spec.params()
    if spec.x >= spec.T2 - spec.T1:
        return MonteCarloEstimate(0.0, 0.0, reps, seed, step, "c_constant", params,
                                  ("x >= T2 - T1: constant is identically 0",))
    levels = c_constant_levels(spec, step, reps, seed, workers)
    capped = np.minimum(levels, spec.w)
    exponent = 2.0 * spec.c * capped
    keep = exponent <= EXP_OVERFLOW_GUARD
    notes = ["grid sojourn on (T1, T2]; discretization biases the level low"]
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.warning("dropped %d replicates with 2c*Y* > %g", dropped, EXP_OVERFLOW_GUARD)
        notes.append(f"dropped {dropped} replicates with 2c*Y* > {EXP_OVERFLOW_GUARD}")
    samples = np.exp(exponent[keep])
    return MonteCarloEstimate.from_samples(
        samples, seed=seed, step=step, kind="c_constant", params=params, notes=notes
    )


def prop1_approx(c, w, C_estimate):
    """Small-fluctuation approximation ``exp(-2cw) C(T1, T2, x; w)``."""
    c = check_positive(c, "c")
    w = check_finite(w, "w")
    require_params(C_estimate, "c_constant", c=c, w=w)
    return math.exp(-2.0 * c * w) * C_estimate.value


def prop2_approx(c, a, u, omega, C_inf_estimate=None):
    """Large-fluctuation approximation.

    Returns 1 for ``a`` in (-1, 0) and ``exp(-2c(omega - u)) C(T1, T2, x; inf)``
    for ``a > 0``.
    """
    c = check_positive(c, "c")
    a = check_finite(a, "a")
    if a <= -1:
        raise ValueError(f"a must exceed -1, got {a}")
    if a == 0:
        raise ValueError("a = 0 is the small-fluctuation case")
    if a < 0:
        return 1.0
    if C_inf_estimate is None:
        raise ValueError("a > 0 needs an estimate of C(T1, T2, x; inf)")
    require_params(C_inf_estimate, "c_constant", c=c, w=math.inf)
    return math.exp(-2.0 * c * (omega - u)) * C_inf_estimate.value
