"""Tests for the time-tail potential and its obstacle-problem diagnostics."""
import numpy as np
import pytest

from stefanlab.densities import piecewise_constant
from stefanlab.errors import ConfigError
from stefanlab.fields import Field, WeightField
from stefanlab.grid import run_grid
from stefanlab.potential import (bound_suite, compute_w, default_eps_w,
                                 obstacle_residual, residual_l1_window)
from stefanlab.synthetic import (caloric_polynomial_field,
                                 critical_profile_potential,
                                 vanishing_profile_potential)


def constant_field(c, x_max=1.0, t_end=1.0, dx=0.05, dt=0.05):
    x = (np.arange(int(round(x_max / dx))) + 0.5) * dx
    t = np.arange(0.0, t_end + dt / 2, dt)
    u = np.full((len(t), len(x)), c)
    return Field(x=x, t=t, values=u, frontier_index=np.zeros(len(t), dtype=np.int64),
                 lam=np.zeros(len(t)), alpha=1.0, meta={})


def uniform_weight(x, value, alpha):
    return WeightField(x=x, nu=np.full(len(x), value), alpha=alpha,
                       recorded=np.ones(len(x), dtype=bool))


class TestComputeW:
    def test_constant_field_gives_linear_ramp(self):
        # trapezoid is exact on constants: w(x, t) = c * (t_end - t)
        c = 0.7
        f = constant_field(c)
        w = compute_w(f)
        expected = c * (f.t[-1] - f.t)
        assert np.allclose(w.w, expected[:, None], atol=1e-14)
        assert w.w[-1].max() == 0.0

    def test_tail_bound_is_final_temperature_per_column(self):
        f = constant_field(0.5, x_max=2.0, dx=0.1)
        w = compute_w(f)
        assert w.tail_bound.shape == (len(f.x),)
        assert np.allclose(w.tail_bound, 0.5, atol=1e-14)
        assert w.meta["surviving_mass"] == pytest.approx(0.5 * 2.0, abs=1e-12)

    def test_require_low_tail_refuses_live_fields(self):
        f = constant_field(0.5)
        with pytest.raises(ConfigError):
            compute_w(f, require_low_tail=True)

    def test_shape_mismatch_rejected(self):
        f = constant_field(0.5)
        f.values = f.values[:-1]
        with pytest.raises(ConfigError):
            compute_w(f)

    def test_freeze_index_tracks_threshold_crossing(self):
        f = constant_field(1.0, t_end=1.0, dt=0.01)
        w = compute_w(f)
        # w = 1 - t drops below eps at t = 1 - eps, near the last rows
        idx = w.freeze_index()
        eps = w.eps_w()
        k = int(idx[0])
        assert np.all(idx == k)
        assert w.w[k, 0] <= eps
        assert w.w[k - 1, 0] > eps


class TestObstacleResidual:
    def test_stationary_quadratic_profile_is_residual_free(self):
        # w = ((x - x0)+)^2 / alpha has w_t = 0, w_xx = 2/alpha on the liquid
        # side, and the centered second difference of a quadratic is exact,
        # so nu = 1/alpha cancels the residual to rounding.  The profile
        # never drains, so the tail-free column filter must be off.
        alpha = 2.0
        w = vanishing_profile_potential(alpha, x0=1.0, x_max=3.0, t_end=1.0,
                                        dx=0.02, dt=0.02)
        nu = uniform_weight(w.x, 1.0 / alpha, alpha)
        rep = obstacle_residual(w, nu, interior_margin=0.15, tail_free_only=False)
        assert rep.n_nodes > 1000
        assert rep.linf < 1e-9
        assert rep.l1 < 1e-9
        assert rep.count_w_negative == 0
        assert rep.count_w_t_positive == 0
        assert rep.count_positive_after_freeze == 0

    def test_critical_ramp_is_residual_free(self):
        # w = (t0 - t)+ / alpha: w_t = -1/alpha before t0, zero after, flat
        # in space.  Every column freezes at t0, inside the horizon, so this
        # one exercises the tail-free path.
        alpha = 2.0
        w = critical_profile_potential(alpha, t0=0.5, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x, 1.0 / alpha, alpha)
        rep = obstacle_residual(w, nu, interior_margin=0.1, tail_free_only=True)
        assert rep.n_nodes > 100
        assert rep.linf < 1e-10
        assert rep.count_w_negative == 0
        assert rep.count_w_t_positive == 0
        assert rep.count_positive_after_freeze == 0

    def test_wrong_weight_violates_residual(self):
        # doubling nu leaves a residual of exactly nu on the liquid region
        alpha = 2.0
        w = critical_profile_potential(alpha, t0=0.5, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x, 2.0 / alpha, alpha)
        rep = obstacle_residual(w, nu, interior_margin=0.1, tail_free_only=True)
        assert rep.linf == pytest.approx(1.0 / alpha, abs=1e-10)

    def test_margin_must_be_positive(self):
        w = critical_profile_potential(1.0, t0=0.5, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x, 1.0, 1.0)
        with pytest.raises(ConfigError):
            obstacle_residual(w, nu, interior_margin=0.0)

    def test_weight_grid_must_match(self):
        w = critical_profile_potential(1.0, t0=0.5, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x[:-1], 1.0, 1.0)
        with pytest.raises(ConfigError):
            obstacle_residual(w, nu, interior_margin=0.1)


class TestResidualWindow:
    def test_matching_weight_cancels_inside_box(self):
        # w = (t0 - t)+ / alpha again: inside the live patch the residual is
        # -1/alpha + nu, so nu = 1/alpha kills it node for node.
        alpha = 2.0
        w = critical_profile_potential(alpha, t0=0.8, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x, 1.0 / alpha, alpha)
        l1, n = residual_l1_window(w, nu, (0.1, 0.9, 0.1, 0.6))
        assert n > 500
        assert l1 < 1e-10

    def test_wrong_weight_shows_up_as_area_times_error(self):
        alpha = 2.0
        w = critical_profile_potential(alpha, t0=0.8, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x, 2.0 / alpha, alpha)
        l1, n = residual_l1_window(w, nu, (0.1, 0.9, 0.1, 0.6))
        cell = w.dx * w.dt_median
        assert l1 == pytest.approx(n * cell / alpha, rel=1e-9)

    def test_box_must_be_nonempty(self):
        w = critical_profile_potential(1.0, t0=0.5, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        nu = uniform_weight(w.x, 1.0, 1.0)
        with pytest.raises(ConfigError):
            residual_l1_window(w, nu, (0.5, 0.2, 0.1, 0.6))


class TestBoundSuite:
    def test_caloric_polynomial_quotients_are_exact(self):
        f = caloric_polynomial_field(x_max=1.0, t_end=1.0, dx=0.05, dt=0.05)
        rep = bound_suite(f, None, window=(0.2, 0.8, 0.1, 0.9))
        assert rep.n_liquid_nodes > 50
        assert rep.max_u_t == pytest.approx(1.0, abs=1e-11)
        assert rep.max_u_xx == pytest.approx(2.0, abs=1e-9)
        # centered slope of x^2 is exactly 2x; smallest interior column in
        # the window sits at x = 0.225
        assert rep.min_u_x == pytest.approx(0.45, abs=1e-11)
        assert rep.near_front_max_abs_u_xx == 0.0

    def test_potential_block_sees_monotone_decay(self):
        alpha = 2.0
        w = critical_profile_potential(alpha, t0=0.5, x_max=1.0, t_end=1.0,
                                       dx=0.05, dt=0.01)
        f = constant_field(0.0, x_max=1.0, t_end=1.0, dx=0.05, dt=0.01)
        rep = bound_suite(f, w, window=(0.1, 0.9, 0.05, 0.4))
        # every centered quotient in the window is exactly -1/alpha
        assert rep.max_w_t == pytest.approx(-1.0 / alpha, abs=1e-10)
        assert rep.max_abs_w_xx < 1e-10

    def test_window_validation(self):
        f = constant_field(0.5)
        with pytest.raises(ConfigError):
            bound_suite(f, None, window=(0.5, 0.2, 0.1, 0.9))
        with pytest.raises(ConfigError):
            bound_suite(f, None, window=(0.2, 0.8, -0.1, 0.9))

    def test_pad_splits_core_from_frontier_band(self):
        # traveling profile: curvature is bounded in the core but the band
        # next to the frontier still reports its own unsigned maximum
        from stefanlab.synthetic import traveling_wave_field
        _, f = traveling_wave_field(alpha=1.0, speed=0.5, x_max=1.0,
                                    t_end=1.0, dx=0.01, dt=0.01)
        rep = bound_suite(f, None, window=(0.0, 1.0, 0.2, 0.8), pad=0.05)
        assert rep.n_liquid_nodes > 0
        assert np.isfinite(rep.max_u_xx)
        assert rep.near_front_max_abs_u_xx > 0.0


class TestGridPipeline:
    def test_subcritical_run_has_small_interior_residual(self):
        # uniform subcritical: the frontier creeps, a band of columns freezes
        # inside the horizon, and their liquid-phase history is where the
        # weighted obstacle identity is checkable.  The tail-free filter must
        # drop every column still warm at t_end, or the missing time tail
        # pollutes the residual with the final temperature.
        d = piecewise_constant([0.0, 1.0], [1.0])
        frontier, f, nu = run_grid(d, alpha=0.7, x_max=6.0, dx=0.025, dt=5e-4,
                                   t_end=1.0)
        w = compute_w(f)
        assert w.w.min() >= -1e-12
        assert np.all(np.diff(w.w, axis=0) <= 1e-12)
        rep = obstacle_residual(w, nu, interior_margin=0.1)
        assert rep.n_nodes > 1000
        assert rep.count_w_negative == 0
        assert rep.count_w_t_positive == 0
        assert rep.count_positive_after_freeze == 0
        assert rep.l1 < 0.02


def test_default_eps_w_scales_with_resolution():
    assert default_eps_w(0.02, 2.0) == pytest.approx(10 * 0.02 ** 2 / 2.0)
    assert default_eps_w(0.01, 2.0) < default_eps_w(0.02, 2.0)
