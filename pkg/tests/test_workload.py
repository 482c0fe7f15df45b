"""Tests for workload construction, horizons and sojourn functionals."""

import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import brute_sojourn_level, brute_stationary, lindley_forward
from fbmqueue.errors import ResourceCapError
from fbmqueue.gaussian_paths import TimeGrid, sample_fbm
from fbmqueue.rng import replicate_generator
from fbmqueue.workload import (
    NEG_INFINITY,
    QueueParams,
    WorkloadPath,
    default_horizon,
    default_step,
    forward_from_net_input,
    horizon_tail_bound,
    simulate_forward,
    simulate_stationary_window,
    sojourn_level,
    sojourn_levels,
    sojourn_time,
    sojourn_times,
    stationary_from_net_input,
    warn_if_short_horizon,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestQueueParams:
    def test_critical_time(self):
        assert QueueParams(0.5, 1.0).critical_time == pytest.approx(1.0)
        assert QueueParams(0.7, 2.0).critical_time == pytest.approx(0.7 / (2 * 0.3))

    @pytest.mark.parametrize("H,c", [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, -1.0)])
    def test_rejects(self, H, c):
        with pytest.raises(ValueError):
            QueueParams(H, c)


class TestStationary:
    @settings(max_examples=60, deadline=None)
    @given(arrays(float, st.integers(3, 40), elements=finite), st.data())
    def test_matches_brute_force(self, x, data):
        n = x.size
        n_h = data.draw(st.integers(1, n - 1))
        n_w = data.draw(st.integers(1, n - n_h))
        got = stationary_from_net_input(x, n_w, n_h)
        np.testing.assert_allclose(got, brute_stationary(x, n_w, n_h))

    def test_nonnegative_and_shape(self):
        p = simulate_stationary_window(QueueParams(0.7, 1.0), 1.0, 5.0, 1 / 32,
                                       replicate_generator(1, 0))
        assert p.values.shape == (33,)
        assert (p.values >= 0).all()
        assert p.truncation_horizon == 5.0

    def test_backward_recursion_bound(self):
        # window of Q_i is {i} plus the window of Q_{i+1} minus its last point
        x = np.cumsum(np.random.default_rng(4).standard_normal(300))
        q = stationary_from_net_input(x, 200, 50)
        bound = np.maximum(0.0, q[1:] + x[1:200] - x[:199])
        assert (q[:-1] <= bound + 1e-12).all()

    def test_grid_cap(self):
        with pytest.raises(ResourceCapError):
            simulate_stationary_window(QueueParams(0.5, 1.0), 1.0, 1e6, 1e-3,
                                       replicate_generator(0, 0))


class TestForward:
    def test_matches_lindley_recursion(self):
        rng = np.random.default_rng(0)
        step, c = 0.01, 1.3
        inc = rng.standard_normal((5, 200)) * math.sqrt(step)
        x = np.concatenate([np.zeros((5, 1)), np.cumsum(inc - c * step, axis=1)], axis=1)
        q0 = np.array([0.0, 0.1, 1.0, 2.0, 5.0])
        got = forward_from_net_input(x, q0)
        ref = lindley_forward(q0, inc, c, step)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_simulate_forward(self):
        driver = sample_fbm(TimeGrid.over(1.0, 1 / 16), 0.5, replicate_generator(0, 0))
        q = simulate_forward(QueueParams(0.5, 1.0), 2.0, driver)
        assert q.values[0] == 2.0
        assert (q.values >= 0).all()
        assert q.grid == driver.grid

    def test_rejects_negative_start(self):
        driver = sample_fbm(TimeGrid.over(1.0, 0.25), 0.5, replicate_generator(0, 0))
        with pytest.raises(ValueError):
            simulate_forward(QueueParams(0.5, 1.0), -1.0, driver)


class TestSojourn:
    def _path(self, values, step=0.25):
        return WorkloadPath(TimeGrid(0.0, step, len(values)), np.asarray(values, float))

    def test_half_open_window(self):
        p = self._path([5, 5, 0, 5, 5])
        assert sojourn_time(p, 1.0, (0.0, 1.0)) == 0.75
        assert sojourn_time(p, 1.0, (0.25, 1.0)) == 0.5

    def test_strict_inequality(self):
        p = self._path([1, 1, 1])
        assert sojourn_time(p, 1.0, (0.0, 0.5)) == 0.0

    def test_interval_outside_grid(self):
        with pytest.raises(ValueError):
            sojourn_time(self._path([1, 1, 1]), 0.0, (0.0, 3.0))

    @settings(max_examples=80, deadline=None)
    @given(arrays(float, st.integers(1, 25), elements=finite), st.floats(0, 8))
    def test_level_matches_brute_force(self, values, x):
        assert sojourn_level(values, 0.25, x) == brute_sojourn_level(values, 0.25, x)

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, st.integers(1, 25), elements=finite), st.floats(0, 8))
    def test_level_is_rearrangement(self, values, x):
        # sojourn above any z below z* exceeds x, and at z* it does not
        z = sojourn_level(values, 0.25, x)
        if z == NEG_INFINITY:
            assert 0.25 * values.size <= x + 1e-9
        else:
            assert sojourn_times(values, z - 1e-9, 0.25) > x
            assert sojourn_times(values, z, 0.25) <= x + 1e-12

    def test_level_monotone_in_duration(self):
        v = np.random.default_rng(1).standard_normal(50)
        levels = [sojourn_level(v, 0.1, x) for x in np.linspace(0, 6, 30)]
        assert all(b <= a for a, b in zip(levels, levels[1:]))

    def test_batched_equals_single(self):
        v = np.random.default_rng(2).standard_normal((6, 40))
        np.testing.assert_array_equal(
            sojourn_levels(v, 0.1, 0.35), [sojourn_level(r, 0.1, 0.35) for r in v]
        )
        assert (sojourn_levels(v, 0.1, 10.0) == NEG_INFINITY).all()

    def test_duration_exactly_on_grid(self):
        # x = 2 * step needs 3 points above the level
        assert sojourn_level([3.0, 2.0, 1.0, 0.0], 0.1, 0.2) == 1.0


class TestHorizonAndStep:
    def test_default_horizon(self):
        assert default_horizon(QueueParams(0.5, 1.0), 2.0) == pytest.approx(16.0)

    def test_tail_bound_decreases(self):
        p = QueueParams(0.7, 1.0)
        assert horizon_tail_bound(p, 2, 40) < horizon_tail_bound(p, 2, 10)

    def test_short_horizon_warns(self):
        with pytest.warns(RuntimeWarning):
            warn_if_short_horizon(QueueParams(0.7, 1.0), 1.0, 1.0)

    def test_long_horizon_is_quiet(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            warn_if_short_horizon(QueueParams(0.5, 1.0), 3.0, 30.0)

    def test_default_step(self):
        assert default_step(1.0) == 2**-8
        assert default_step(2.0**20) > 2**-8
        assert (2.0**20) / default_step(2.0**20) + 1 <= 2**20 + 1e-6


class TestWorkloadCsv:
    def test_header(self):
        p = WorkloadPath(TimeGrid(0.0, 0.5, 3), np.array([1.0, 0.5, 0.0]))
        buf = io.StringIO()
        p.to_csv(buf)
        assert buf.getvalue().splitlines()[:2] == ["t,q", "0,1"]
