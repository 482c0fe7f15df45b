"""Conditional-probability Monte Carlo drivers and experiment persistence.

Every driver draws its replicates from per-replicate counter-based streams,
so the same seed yields the same numbers for any worker count. Within one
experiment every level ``u`` reuses the same seed (common random numbers),
which keeps the trend across ``u`` smooth.
"""

import csv
import io
import json
import logging
import math
import os
import subprocess
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .. import __version__
from ..asymptotics import (
    RegimeKind,
    derived_constants,
    thm1_limit,
    thm1_limit_error,
    thm3_constant_specs,
    thm3_envelope,
)
from ..berman import BermanSpec, default_constant_step, estimate_bar_joint, estimate_bar_single
from ..brownian_exact import CConstantSpec, estimate_C, prop1_approx, prop2_approx
from ..errors import AcceptanceStarvationError
from ..estimate import MonteCarloEstimate
from ..gaussian_paths import TimeGrid, sample_fbm_batch
from ..rng import (
    STREAM_COND_BM,
    STREAM_STATIONARY,
    chunk_for,
    replicate_generators,
    run_replicates,
)
from ..workload import (
    default_horizon,
    default_step,
    forward_from_net_input,
    stationary_window_batch,
    sojourn_times,
    warn_if_short_horizon,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("u", "omega", "mc", "se", "eff_n", "closed_form", "asymptotic", "ratio")


@dataclass(frozen=True)
class ResultRecord:
    """Outcome at one level ``u``; ``ratio`` is set only when both operands are."""

    u: float
    omega: float
    mc_estimate: MonteCarloEstimate
    effective_samples: int
    closed_form: float | None = None
    asymptotic: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def ratio_mc_over_asymptotic(self):
        if self.asymptotic is None or self.asymptotic == 0:
            return None
        return self.mc_estimate.value / self.asymptotic

    def csv_row(self):
        return [
            self.u, self.omega, self.mc_estimate.value, self.mc_estimate.std_error,
            self.effective_samples, self.closed_form, self.asymptotic,
            self.ratio_mc_over_asymptotic,
        ]

    def to_dict(self):
        return {
            "u": self.u,
            "omega": self.omega,
            "mc": self.mc_estimate.to_record(),
            "effective_samples": self.effective_samples,
            "closed_form": self.closed_form,
            "asymptotic": self.asymptotic,
            "ratio": self.ratio_mc_over_asymptotic,
            "extras": self.extras,
        }


def _proportion(hits, n, seed, step, kind, params, notes=()):
    """Binomial proportion estimate; ``hits`` and ``n`` are counts."""
    p = hits / n
    se = math.sqrt(max(p * (1.0 - p), 0.0) / n)
    return MonteCarloEstimate(p, se, int(n), seed, step, kind, params, tuple(notes))


def _step_for(config, total_length):
    return config.mc.step if config.mc.step is not None else default_step(total_length)


# --------------------------------------------------------------- H = 1/2 driver


def _cond_bm_block(c, u, omega, T1, T2, x, step, seed, start, stop):
    grid = TimeGrid.over(T2, step)
    window = grid.index_range(T1, T2)
    rngs = replicate_generators(seed, start, stop, STREAM_COND_BM)
    # overshoot first, then the path, from each replicate's own stream
    q0 = np.array([u + rng.exponential(1.0 / (2.0 * c)) for rng in rngs])
    net = sample_fbm_batch(grid, 0.5, rngs)
    net -= c * grid.times
    q = forward_from_net_input(net, q0)
    return sojourn_times(q[:, window], omega, step) > x


def bm_constants(config):
    """The constant C(T1, T2, x; w) (or w = inf) the Brownian regime compares against."""
    c = config.model.drain
    w = config.windows
    regime = config.regime
    if regime.kind is RegimeKind.LARGE_BM and regime.value < 0:
        return {}
    level = regime.value if regime.kind is RegimeKind.SMALL_BM else math.inf
    spec = CConstantSpec(w.T1, w.T2, w.x, level, c)
    step = config.mc.constant_step or _step_for(config, w.T2)
    reps = config.mc.constant_reps or config.mc.reps
    return {"C": estimate_C(spec, step, reps, config.mc.seed, config.mc.workers)}


def estimate_conditional_bm(config, u, constants=None):
    """P(sojourn of Q above omega(u) on (T1, T2] exceeds x | Q(0) > u) for H = 1/2.

    Exact conditional sampling: ``Q(0) = u + Exp(2c)`` and a forward
    simulation, so every replicate counts.
    """
    if config.model.hurst != 0.5:
        raise ValueError("the Brownian driver needs H = 0.5")
    c = config.model.drain
    w = config.windows
    regime = config.regime
    omega = regime.omega(u, 0.5, c)
    step = _step_for(config, w.T2)
    seed = config.mc.seed
    reps = config.mc.reps
    params = {"c": c, "u": u, "omega": omega, "T1": w.T1, "T2": w.T2, "x": w.x}
    if w.x >= w.T2 - w.T1:
        est = MonteCarloEstimate(0.0, 0.0, reps, seed, step, "conditional_bm", params,
                                 ("x >= T2 - T1: probability is identically 0",))
    else:
        func = partial(_cond_bm_block, c, u, omega, w.T1, w.T2, w.x, step, seed)
        hits = run_replicates(func, reps, chunk_for(w.T2 / step + 1), config.mc.workers)
        est = _proportion(int(hits.sum()), reps, seed, step, "conditional_bm", params)

    if constants is None:
        constants = bm_constants(config)
    extras = {}
    if regime.kind is RegimeKind.SMALL_BM:
        asym = prop1_approx(c, regime.value, constants["C"])
    else:
        asym = prop2_approx(c, regime.value, u, omega, constants.get("C"))
    if "C" in constants:
        extras["C"] = constants["C"].to_record()
    return ResultRecord(u, omega, est, reps, None, asym, extras)


# ----------------------------------------------------------------- fBm driver


def _cond_fbm_block(params, u, omega, T1, T2, T3, x, y, window_end, horizon, step, seed,
                    start, stop):
    rngs = replicate_generators(seed, start, stop, STREAM_STATIONARY)
    q = stationary_window_batch(params, window_end, horizon, step, rngs)
    grid = TimeGrid(0.0, step, q.shape[1])
    accepted = sojourn_times(q[:, grid.index_range(0.0, T1)], u, step) > x
    target = sojourn_times(q[:, grid.index_range(T2, T3)], omega, step) > y
    return np.column_stack([accepted, target])


def fbm_constants(config):
    """Berman-type constant estimates the fBm regime compares against."""
    H = config.model.hurst
    w = config.windows
    regime = config.regime
    seed = config.mc.seed
    reps = config.mc.constant_reps or config.mc.reps
    workers = config.mc.workers
    if regime.kind is RegimeKind.SMALL_FBM:
        spec = BermanSpec(H, w.T1, regime.value, w.T2, w.T3, w.x, w.y)
        step = config.mc.constant_step or default_constant_step(w.T2)
        return {
            "barB_xy": estimate_bar_joint(spec, step, reps, seed, workers),
            "barB_x": estimate_bar_single(H, w.T1, w.x, step, reps, seed, workers),
        }
    if regime.value < 0:
        return {}
    specs = thm3_constant_specs(H, regime.value, w)
    lo = specs["barB_joint_lower"]
    step = config.mc.constant_step or default_constant_step(lo["T2"])
    bx, up = specs["barB_x"], specs["barB_ay_upper"]
    return {
        "barB_x": estimate_bar_single(H, bx["T1"], bx["x"], step, reps, seed, workers),
        "barB_ay_upper": estimate_bar_single(H, up["T1"], up["x"], step, reps, seed, workers),
        "barB_joint_lower": estimate_bar_joint(
            BermanSpec(H, lo["T1"], 0.0, lo["T2"], lo["T3"], lo["x"], lo["y"]),
            step, reps, seed, workers,
        ),
    }


def _horizon_for(config, u):
    h = config.mc.horizon if config.mc.horizon is not None else default_horizon(config.model, u)
    warn_if_short_horizon(config.model, u, h)
    return h


def estimate_conditional_fbm(config, u, constants=None):
    """Rejection estimate of the conditional sojourn probability for any H.

    Windows are ``T_i(u) = T_i * v(u)``. A replicate is accepted when its
    scaled sojourn above ``u`` on ``[0, T1(u)]`` exceeds ``x``; the estimate
    is the fraction of accepted replicates whose scaled sojourn above
    ``omega(u)`` on ``[T2(u), T3(u)]`` exceeds ``y``.

    Raises
    ------
    AcceptanceStarvationError
        When fewer than ``mc.min_accepted`` replicates are accepted.
    """
    params = config.model
    H, c = params.hurst, params.drain
    w = config.windows
    regime = config.regime
    v = derived_constants(H, c, u).v_u
    sw = w.scaled(v)
    omega = regime.omega(u, H, c)
    horizon = _horizon_for(config, u)
    step = _step_for(config, max(sw.T1, sw.T3) + horizon)
    window_end = math.ceil(max(sw.T1, sw.T3) / step - 1e-9) * step
    seed = config.mc.seed
    reps = config.mc.reps
    func = partial(_cond_fbm_block, params, u, omega, sw.T1, sw.T2, sw.T3, sw.x, sw.y,
                   window_end, horizon, step, seed)
    points = (window_end + horizon) / step + 2
    flags = run_replicates(func, reps, chunk_for(points), config.mc.workers)
    accepted = flags[:, 0]
    n_acc = int(accepted.sum())
    if n_acc < config.mc.min_accepted:
        raise AcceptanceStarvationError(n_acc, config.mc.min_accepted, u)
    hits = int(np.count_nonzero(flags[accepted, 1]))
    est_params = {"H": H, "c": c, "u": u, "omega": omega, "v_u": v, "T1": sw.T1,
                  "T2": sw.T2, "T3": sw.T3, "x": sw.x, "y": sw.y, "horizon": horizon}
    est = _proportion(hits, n_acc, seed, step, "conditional_fbm", est_params,
                      (f"accepted {n_acc} of {reps} replicates",))

    if constants is None:
        constants = fbm_constants(config)
    extras = {"accept_rate": n_acc / reps, "horizon": horizon}
    if regime.kind is RegimeKind.SMALL_FBM:
        asym = thm1_limit(constants["barB_xy"], constants["barB_x"])
        extras["asymptotic_se"] = thm1_limit_error(constants["barB_xy"], constants["barB_x"])
    else:
        env = thm3_envelope(H, c, u, regime.value, w, constants or None)
        asym = env.decay * env.upper
        extras["envelope"] = {
            "decay": env.decay, "lower": env.lower, "upper": env.upper,
            "log_rate": env.log_rate, "lower_se": env.lower_se, "upper_se": env.upper_se,
        }
    for name, est_c in constants.items():
        extras[name] = est_c.to_record()
    return ResultRecord(u, omega, est, n_acc, None, asym, extras)


# ------------------------------------------------------------ Piterbarg checks


def _piterbarg_block(params, u, T, horizon, step, strong, seed, start, stop):
    rngs = replicate_generators(seed, start, stop, STREAM_STATIONARY)
    q = stationary_window_batch(params, T, horizon, step, rngs)
    grid = TimeGrid(0.0, step, q.shape[1])
    window = q[:, : grid.index_range(-1.0, T).stop]
    point = q[:, 0] > u
    path = window.min(axis=1) > u if strong else window.max(axis=1) > u
    return np.column_stack([point, path])


def piterbarg_window(config, u):
    p = config.piterbarg
    return p.window_scale * u**p.window_exponent


def estimate_piterbarg(config, u):
    """Ratio P(sup (or inf) of Q over [0, T(u)] > u) / P(Q(0) > u) from shared paths.

    The ``strong_piterbarg`` experiment uses the infimum. The standard error
    is the delta-method error of a ratio of two correlated means.
    """
    params = config.model
    strong = config.experiment == "strong_piterbarg"
    T = piterbarg_window(config, u)
    horizon = _horizon_for(config, u)
    step = _step_for(config, T + horizon)
    seed = config.mc.seed
    reps = config.mc.reps
    func = partial(_piterbarg_block, params, u, T, horizon, step, strong, seed)
    flags = run_replicates(func, reps, chunk_for((T + horizon) / step + 2),
                           config.mc.workers).astype(float)
    a, b = flags[:, 0], flags[:, 1]
    n_point = int(a.sum())
    if n_point < config.mc.min_accepted:
        raise AcceptanceStarvationError(n_point, config.mc.min_accepted, u)
    ma, mb = a.mean(), b.mean()
    r = mb / ma
    cov = np.cov(a, b, ddof=1)
    var = (cov[1, 1] - 2 * r * cov[0, 1] + r * r * cov[0, 0]) / (reps * ma * ma)
    kind = "strong_piterbarg_ratio" if strong else "piterbarg_ratio"
    est = MonteCarloEstimate(
        float(r), float(math.sqrt(max(var, 0.0))), reps, seed, step, kind,
        {"H": params.hurst, "c": params.drain, "u": u, "T": T, "horizon": horizon},
        (f"P(Q(0)>u) estimated as {ma:.6g}",),
    )
    closed = math.exp(-2 * params.drain * u) if params.hurst == 0.5 else None
    extras = {"point_probability": float(ma), "path_probability": float(mb), "window": T,
              "horizon": horizon}
    if closed is not None:
        extras["stationary_tail_exact"] = closed
    return ResultRecord(u, u, est, n_point, None, 1.0, extras)


# --------------------------------------------------------------- experiments


def run_levels(config):
    """Evaluate every level of ``config``; constants are estimated once up front."""
    if config.experiment != "conditional":
        return [estimate_piterbarg(config, u) for u in config.u_list], {}
    if config.regime.is_brownian:
        constants = bm_constants(config)
        return [estimate_conditional_bm(config, u, constants) for u in config.u_list], constants
    constants = fbm_constants(config)
    return [estimate_conditional_fbm(config, u, constants) for u in config.u_list], constants


def _fmt(val):
    if val is None:
        return ""
    if isinstance(val, (bool, np.bool_)):
        return str(int(val))
    if isinstance(val, (int, np.integer)):
        return str(int(val))
    return repr(float(val))


def records_to_csv(records):
    """CSV text with the fixed column set; floats use shortest round-trip repr."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(v) for v in rec.csv_row()])
    return buf.getvalue()


def git_describe():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=10, check=True,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def provenance(config, records):
    return {
        "name": config.name,
        "experiment": config.experiment,
        "seed": config.mc.seed,
        "reps": config.mc.reps,
        "workers": config.mc.workers,
        "steps": [r.mc_estimate.step for r in records],
        "horizons": [r.extras.get("horizon") for r in records],
        "package_version": __version__,
        "git_describe": git_describe(),
        "config": config.raw,
    }


def run_experiment(config, csv_path=None, json_path=None):
    """Run ``config`` and write the CSV table and JSON sidecar.

    Paths default to ``config.csv_path`` / ``config.json_path``; a missing
    path means that artifact is not written. Returns ``(records, constants)``.
    """
    records, constants = run_levels(config)
    csv_path = csv_path or config.csv_path
    json_path = json_path or config.json_path
    if csv_path:
        _ensure_parent(csv_path)
        with open(csv_path, "w", newline="") as fh:
            fh.write(records_to_csv(records))
        logger.info("wrote %s", csv_path)
    if json_path:
        _ensure_parent(json_path)
        doc = {
            "provenance": provenance(config, records),
            "constants": {k: v.to_record() for k, v in constants.items()},
            "results": [r.to_dict() for r in records],
        }
        with open(json_path, "w") as fh:
            json.dump(doc, fh, indent=2, default=_json_default)
            fh.write("\n")
        logger.info("wrote %s", json_path)
    return records, constants


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
