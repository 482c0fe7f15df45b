"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

These runs use the full replicate counts and take several minutes in total.
"""

import math
import time
import warnings

import numpy as np
import pytest

from _oracles import c_constant_quadrature, q1_mp, q2_mp
from fbmqueue.asymptotics import large_fluctuation_log_rate, thm1_limit, thm1_limit_error, thm3_envelope
from fbmqueue.berman import (
    BermanSpec,
    bar_joint_samples,
    bar_single_samples,
    estimate_bar_joint,
    estimate_bar_single,
    estimate_finite_horizon_joint,
    estimate_pickands,
    estimate_pickands_alpha2,
)
from fbmqueue.brownian_exact import (
    BmTransientQuery,
    transient_exceed_given_exceed,
    transient_exceed_given_level,
)
from fbmqueue.gaussian_paths import TimeGrid, fbm_covariance, sample_fbm_batch
from fbmqueue.harness.cli import main as cli_main
from fbmqueue.harness.config import parse_config
from fbmqueue.harness.drivers import estimate_conditional_fbm, fbm_constants, run_levels
from fbmqueue.harness.presets import load_preset, preset_document
from fbmqueue.rng import STREAM_STATIONARY, chunk_for, replicate_generators, run_replicates
from fbmqueue.workload import stationary_from_net_input

E2 = math.exp(-2.0)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


def trend_toward_one(ratios, errors):
    """Each |r - 1| is at most the previous one plus two combined standard errors."""
    return all(
        abs(r1 - 1) <= abs(r0 - 1) + 2 * math.hypot(e0, e1)
        for r0, r1, e0, e1 in zip(ratios, ratios[1:], errors, errors[1:])
    )


def test_criterion_01_fbm_covariance(report):
    pairs = [(0.1, 0.9), (0.25, 0.25), (0.3, 0.6), (0.5, 0.75), (1.0, 1.0)]
    grid = TimeGrid.over(1.0, 2**-10)
    n = 10_000
    worst = 0.0
    start = time.perf_counter()
    for k, H in enumerate((0.3, 0.5, 0.7)):
        paths = sample_fbm_batch(grid, H, replicate_generators(100 + k, 0, n))
        for s, t in pairs:
            prod = paths[:, round(s / grid.step)] * paths[:, round(t / grid.step)]
            z = abs(prod.mean() - fbm_covariance(s, t, H)) / (prod.std(ddof=1) / math.sqrt(n))
            worst = max(worst, z)
    elapsed = time.perf_counter() - start
    report(1, worst < 4 and elapsed < 60, f"max |z| = {worst:.2f} (< 4), runtime {elapsed:.1f}s (< 60s)")


def _tail_block(step, n_horizon, start, stop):
    grid = TimeGrid(0.0, step, n_horizon + 1)
    x = sample_fbm_batch(grid, 0.5, replicate_generators(7, start, stop, STREAM_STATIONARY))
    x -= grid.times
    fine = stationary_from_net_input(x, 1, n_horizon)[:, 0]
    coarse = stationary_from_net_input(x[:, ::2], 1, n_horizon // 2)[:, 0]
    return np.stack([coarse > 1.0, fine > 1.0], axis=1)


def test_criterion_02_stationary_tail(report):
    # the delta-grid path is the even-index subsample of the delta/2 path
    step, horizon, reps = 2**-10, 12.0, 100_000
    n_fine = int(horizon / (step / 2))
    hits = run_replicates(lambda a, b: _tail_block(step / 2, n_fine, a, b), reps, chunk_for(n_fine))
    coarse, fine = hits.mean(axis=0)
    se = math.sqrt(coarse * (1 - coarse) / reps)
    in_band = E2 - 0.012 <= coarse <= E2 + 0.004
    toward = abs(fine - E2) < abs(coarse - E2)
    report(2, in_band and toward,
           f"P(Q(0)>1) = {coarse:.5f} +- {se:.5f} at step 2^-10, {fine:.5f} at 2^-11, exact {E2:.5f}")


TRANSIENT_GRID = [(1.0, 1.0, 1.2, 1.0), (1.0, 1.0, 1.5, 0.5), (0.5, 2.0, 1.0, 3.0),
                  (2.0, 0.3, 0.6, 0.1), (1.0, 0.0, 0.5, 2.0), (1.5, 3.0, 2.0, 0.05)]


def _transient_mc(c, u, omega, T, exact_start, reps, seed):
    # Q(T) = X(T) + max(Q(0), -min X); the minimum between grid points is drawn from the
    # Brownian bridge law, so the estimate carries no grid bias
    n = 64
    step = T / n
    grid = TimeGrid(0.0, step, n + 1)
    hits = 0
    for lo in range(0, reps, 5000):
        rngs = replicate_generators(seed, lo, min(lo + 5000, reps))
        x = sample_fbm_batch(grid, 0.5, rngs) - c * grid.times
        q0 = np.full(len(rngs), u)
        if not exact_start:
            q0 = q0 + np.array([r.exponential(1 / (2 * c)) for r in rngs])
        log_u = np.log1p(-np.stack([r.random(n) for r in rngs]))
        a, b = x[:, :-1], x[:, 1:]
        bridge_min = 0.5 * (a + b - np.sqrt((b - a) ** 2 - 2 * step * log_u))
        low = np.minimum(bridge_min.min(axis=1), 0.0)
        hits += int(np.count_nonzero(x[:, -1] + np.maximum(q0, -low) > omega))
    p = hits / reps
    return p, math.sqrt(max(p * (1 - p), 1.0 / reps) / reps)


def test_criterion_03_transient_closed_forms(report):
    reps = 100_000
    worst = -math.inf
    for k, (c, u, omega, T) in enumerate(TRANSIENT_GRID):
        q = BmTransientQuery(c, u, omega, T)
        for exact_start, fn in ((True, transient_exceed_given_level), (False, transient_exceed_given_exceed)):
            p, se = _transient_mc(c, u, omega, T, exact_start, reps, 300 + 2 * k + exact_start)
            worst = max(worst, abs(p - fn(q)) - 3 * se - 0.01)
    limit_err = 0.0
    for u, omega in ((1.0, 0.5), (0.5, 1.0), (1.0, 1.5)):
        short = BmTransientQuery(1.0, u, omega, 1e-6)
        limit_err = max(limit_err, abs(transient_exceed_given_level(short) - float(omega < u)))
        q2_short = 1.0 if omega < u else math.exp(-2 * (omega - u))
        limit_err = max(limit_err, abs(transient_exceed_given_exceed(short) - q2_short))
        long = BmTransientQuery(1.0, u, omega, 1e3)
        for fn in (transient_exceed_given_level, transient_exceed_given_exceed):
            limit_err = max(limit_err, abs(fn(long) - math.exp(-2 * omega)))
    # the formulas themselves agree with the independent high-precision oracle
    oracle_err = max(
        max(abs(transient_exceed_given_level(BmTransientQuery(*p)) - float(q1_mp(*p))),
            abs(transient_exceed_given_exceed(BmTransientQuery(*p)) - float(q2_mp(*p))))
        for p in TRANSIENT_GRID
    )
    ok = worst <= 0 and limit_err <= 1e-10 and oracle_err < 1e-10
    report(3, ok, f"max excess over 3SE+0.01 = {worst:.4f} (<= 0), limit error {limit_err:.1e}, "
                  f"oracle error {oracle_err:.1e}")


def test_criterion_04_brownian_small_fluctuation(report):
    start = time.perf_counter()
    config = load_preset("prop1-bm")
    records, constants = run_levels(config)
    C = constants["C"]
    ratios = [r.ratio_mc_over_asymptotic for r in records]
    errors = [r * math.hypot(rec.mc_estimate.relative_error(), C.relative_error())
              for r, rec in zip(ratios, records)]
    ref, ref_se = c_constant_quadrature(0.0, 1.0, 0.2, 0.3, 1.0, 2**-8, 20000, 2025)
    elapsed = time.perf_counter() - start
    cross = abs(C.value - ref) <= 3 * math.hypot(C.std_error, ref_se)
    ok = trend_toward_one(ratios, errors) and abs(ratios[-1] - 1) <= 0.15 and cross and elapsed < 600
    report(4, ok, f"ratios {[round(r, 4) for r in ratios]} at u=2,3,4; C = {C.value:.4f} +- "
                  f"{C.std_error:.4f} vs oracle {ref:.4f} +- {ref_se:.4f}; runtime {elapsed:.0f}s")


def test_criterion_05_brownian_large_fluctuation(report):
    neg, _ = run_levels(load_preset("prop2-bm-neg"))
    at4 = next(r for r in neg if r.u == 4.0).mc_estimate.value
    pos, _ = run_levels(load_preset("prop2-bm-pos"))
    last = pos[-1]
    ratio = last.ratio_mc_over_asymptotic
    ok = at4 >= 0.95 and 0.7 <= ratio <= 1.3
    report(5, ok, f"a=-0.5: {at4:.4f} at u=4 (>= 0.95); a=1: MC/approx = {ratio:.3f} at u={last.u:g}")


def test_criterion_06_berman_identities(report):
    step, reps = 2**-6, 2000
    zero = all(
        estimate_bar_joint(BermanSpec(0.6, 1.0, 0.0, 0.5, 1.5, x, y), step, 100, 0).value == 0.0
        for x, y in ((1.0, 0.0), (1.5, 0.2), (0.0, 1.0), (0.2, 1.4))
    ) and estimate_bar_single(0.6, 1.0, 1.0, step, 100, 0).value == 0.0
    degenerate = all(
        np.array_equal(bar_joint_samples(BermanSpec(H, 1.0, 0.0, 0.0, 1.0, 0.2, 0.2), step, reps, 4),
                       bar_single_samples(H, 1.0, 0.2, step, reps, 4))
        for H in (0.3, 0.5, 0.8)
    )
    base = dict(H=0.7, T1=1.0, T2=0.5, T3=1.5)
    ref = bar_joint_samples(BermanSpec(lam=0.0, x=0.2, y=0.3, **base), step, reps, 2)
    monotone = all(
        (bar_joint_samples(BermanSpec(**base, **change), step, reps, 2) <= ref).all()
        for change in ({"lam": 0.5, "x": 0.2, "y": 0.3}, {"lam": 0.0, "x": 0.4, "y": 0.3},
                       {"lam": 0.0, "x": 0.2, "y": 0.6})
    )
    report(6, zero and degenerate and monotone,
           f"zero region {zero}, degenerate joint == single {degenerate}, pathwise monotone {monotone}")


def test_criterion_07_pickands(report):
    h = estimate_pickands(0.5, 128.0, 2**-8, 100_000, 7)
    a2 = estimate_pickands_alpha2(128.0, 2**-8, 100_000, 8)
    target = 1 / math.sqrt(math.pi)
    ok = abs(h.value - 1) <= 0.15 and abs(a2.value / target - 1) <= 0.15
    report(7, ok, f"H_1 estimate {h.value:.4f} +- {h.std_error:.4f} (target 1); alpha=2 estimate "
                  f"{a2.value:.4f} +- {a2.std_error:.4f} (target {target:.4f})")


def test_criterion_08_finite_window_constant(report):
    spec = BermanSpec(0.5, 1.0, 0.0, 0.5, 1.5, 0.2, 0.3)
    step = 2**-6
    bar = estimate_bar_joint(spec, step, 40_000, 81)
    pick = estimate_pickands(0.5, 64.0, step, 20_000, 82)
    ratios, errors = [], []
    for S in (16.0, 32.0, 64.0):
        fin = estimate_finite_horizon_joint(spec, S, step, 20_000, 83)
        r = fin.value / (S * pick.value * bar.value)
        ratios.append(r)
        errors.append(r * math.sqrt(fin.relative_error() ** 2 + pick.relative_error() ** 2
                                    + bar.relative_error() ** 2))
    ok = trend_toward_one(ratios, errors) and abs(ratios[-1] - 1) <= 0.2
    report(8, ok, f"ratios {[round(r, 4) for r in ratios]} at S=16,32,64 (errors "
                  f"{[round(e, 4) for e in errors]})")


def test_criterion_09_small_fluctuation_limit(report):
    results = {}
    for lam in (-1.0, 0.0, 1.0):
        doc = preset_document("thm1-bm")
        doc["regime"]["value"] = lam
        doc["mc"]["horizon"] = 16.0
        config = parse_config(doc)
        constants = fbm_constants(config)
        limit = thm1_limit(constants["barB_xy"], constants["barB_x"])
        limit_se = thm1_limit_error(constants["barB_xy"], constants["barB_x"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            recs = [estimate_conditional_fbm(config, u, constants) for u in config.u_list]
        ratios = [r.mc_estimate.value / limit for r in recs]
        errors = [math.hypot(r.mc_estimate.std_error / limit, r.mc_estimate.value * limit_se / limit**2)
                  for r in recs]
        results[lam] = (limit, [r.mc_estimate.value for r in recs], ratios, errors)
    trend = all(trend_toward_one(v[2], v[3]) for v in results.values())
    final = all(abs(v[2][-1] - 1) <= 0.2 for v in results.values())
    lams = sorted(results)
    mono_limit = all(results[a][0] >= results[b][0] for a, b in zip(lams, lams[1:]))
    mono_mc = all(all(p >= q for p, q in zip(results[a][1], results[b][1])) for a, b in zip(lams, lams[1:]))
    detail = "; ".join(f"lambda={lam:g}: limit {v[0]:.4f}, ratios {[round(r, 3) for r in v[2]]}"
                       for lam, v in results.items())
    report(9, trend and final and mono_limit and mono_mc,
           f"{detail}; monotone in lambda: limit {mono_limit}, MC {mono_mc}")


def test_criterion_10_large_fluctuation_envelope(report):
    consistent = []
    for H in (0.5, 0.7):
        doc = preset_document("thm3-pos")
        doc["model"]["hurst"] = H
        doc["mc"]["constant_reps"] = 40_000
        config = parse_config(doc)
        env = thm3_envelope(H, 1.0, 2.0, 0.5, config.windows, fbm_constants(config))
        consistent.append((H, env.consistent, env.lower, env.upper))
    identity = max(
        abs(math.exp(large_fluctuation_log_rate(0.5, c, a) * u) - math.exp(-2 * c * ((1 + a) * u - u)))
        / math.exp(-2 * c * a * u)
        for c in (0.5, 1.0, 2.0) for a in (0.25, 0.5, 1.0) for u in (1.0, 3.0)
    )
    neg_config = load_preset("thm3-neg")
    branch = thm3_envelope(0.5, 1.0, 3.0, -0.5, neg_config.windows)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mc = estimate_conditional_fbm(neg_config, 3.0).mc_estimate.value
    ok = (all(c[1] for c in consistent) and identity <= 1e-12
          and branch.lower == branch.upper == branch.decay == 1.0 and mc > 0.9)
    env_text = ", ".join(f"H={H}: lower {lo:.4f} <= upper {up:.4f} {flag}" for H, flag, lo, up in consistent)
    report(10, ok, f"{env_text}; decay identity error {identity:.1e}; a=-0.5 MC at u=3 {mc:.4f}")


def test_criterion_11_reproducibility(report, tmp_path):
    outputs = []
    for run, workers in enumerate(("1", "1", "8")):
        out = tmp_path / f"run{run}"
        assert cli_main(["preset", "prop1-bm", "--reps", "5000", "--workers", workers, "--out", str(out)]) == 0
        outputs.append((out / "prop1-bm.csv").read_bytes())
    report(11, outputs[0] == outputs[1] == outputs[2],
           "prop1-bm CSV identical across two runs and across 1 vs 8 workers")
