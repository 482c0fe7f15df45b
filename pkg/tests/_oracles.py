"""Independent reference implementations used by the tests.

Nothing here imports the package's simulation code: paths come from plain
``numpy.random.default_rng`` draws, reflection from the Lindley recursion,
and closed forms are evaluated in high precision with mpmath.
"""

import math

import mpmath
import numpy as np

mpmath.mp.dps = 40

#: expected grid-maximum shortfall of Brownian motion, E[max gap] = beta * sigma * sqrt(step)
GRID_MAX_BETA = -float(mpmath.zeta(0.5)) / math.sqrt(2.0 * math.pi)


def mp_phi(z):
    return mpmath.ncdf(z)


def q1_mp(c, u, omega, T):
    """P(Q(T) > omega | Q(0) = u) for reflected Brownian motion with drift -c.

    Derived from the reflection principle: the free path part plus the part
    that hits 0 and is regenerated there.
    """
    c, u, omega, T = (mpmath.mpf(v) for v in (c, u, omega, T))
    s = mpmath.sqrt(T)
    return mp_phi((u - omega - c * T) / s) + mpmath.e ** (-2 * c * omega) * mp_phi((c * T - omega - u) / s)


def q2_mp(c, u, omega, T):
    """P(Q(T) > omega | Q(0) > u) by integrating :func:`q1_mp` over the exponential overshoot."""
    c, u, omega, T = (mpmath.mpf(v) for v in (c, u, omega, T))
    rate = 2 * c

    def integrand(e):
        return rate * mpmath.e ** (-rate * e) * q1_mp(c, u + e, omega, T)

    return mpmath.quad(integrand, [0, omega - u if omega > u else 1, mpmath.inf])


def lindley_forward(q0, increments, c, step):
    """Q_k = max(Q_{k-1} + dB_k - c step, 0), vectorized over rows."""
    q = np.empty((increments.shape[0], increments.shape[1] + 1))
    q[:, 0] = q0
    for k in range(increments.shape[1]):
        q[:, k + 1] = np.maximum(q[:, k] + increments[:, k] - c * step, 0.0)
    return q


def brute_stationary(x, n_window, n_horizon):
    """max_{i <= j <= i + n_horizon} x_j - x_i by explicit loops."""
    out = np.empty(n_window)
    for i in range(n_window):
        out[i] = max(x[i : i + n_horizon + 1]) - x[i]
    return out


def brute_sojourn_level(values, step, x):
    """Largest value v with step * #{values >= v} > x, or -inf."""
    best = -math.inf
    for v in values:
        if step * sum(1 for w in values if w >= v) > x and v > best:
            best = v
    return best


def bm_sup_exp_mean(T):
    """E exp(sup_{[0,T]} sqrt(2) B(t) - t), from the law of the drifted maximum."""
    T = mpmath.mpf(T)
    a = mpmath.sqrt(T / 2)
    phi = mpmath.npdf(a)
    return float(1 + mp_phi(a) - (1 - mp_phi(a)) + T * mp_phi(a) + mpmath.sqrt(2 * T) * phi)


def c_constant_quadrature(T1, T2, x, w, c, step, reps, seed, n_levels=400):
    """C(T1, T2, x; w) = int_{-inf}^{w} 2c e^{2cy} P(sojourn above y > x) dy.

    The probability comes from fresh paths of ``B(t) - ct`` at every level of
    a y grid, with the sojourn counted directly; the integral is trapezoidal
    with the lower tail closed analytically (the probability is 1 there).
    Returns ``(value, standard_error)``; the error treats levels as sharing
    paths, which is the worst case.
    """
    rng = np.random.default_rng(seed)
    n = int(round(T2 / step))
    t = step * np.arange(1, n + 1)
    inc = rng.standard_normal((reps, n)) * math.sqrt(step)
    paths = np.cumsum(inc, axis=1) - c * t
    window = paths[:, t > T1 + 1e-12]
    lo = float(window.min())
    hi = float(window.max()) if math.isinf(w) else min(w, float(window.max()))
    ys = np.linspace(lo, hi, n_levels)
    probs = np.empty(n_levels)
    per_path = np.empty((reps, n_levels))
    for k, y in enumerate(ys):
        hit = step * np.count_nonzero(window > y, axis=1) > x
        per_path[:, k] = hit
        probs[k] = hit.mean()
    weights = 2 * c * np.exp(2 * c * ys)
    dy = ys[1] - ys[0]
    trap = np.full(n_levels, dy)
    trap[0] = trap[-1] = dy / 2
    tail = math.exp(2 * c * lo) * probs[0]
    value = float(tail + np.sum(weights * probs * trap))
    per_rep = math.exp(2 * c * lo) * per_path[:, 0] + per_path @ (weights * trap)
    se = float(per_rep.std(ddof=1) / math.sqrt(reps))
    return value, se
