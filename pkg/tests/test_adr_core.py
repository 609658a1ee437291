"""Lattice operator, Euler stepping, and logistic benchmark tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman_adr.adr_core import (
    AdrParams,
    InitialBox,
    build_linear_matrix,
    derived_numbers,
    euler_step_nonlinear,
    evolve_nonlinear,
    gaussian_velocity,
    logistic_carleman_truncated,
    logistic_exact,
    logistic_truncation_bound,
    relative_error_series,
)


def make_params(n, velocity=1.0, a=1.0, b=0.6, diffusion=1.0, dt=0.01):
    return AdrParams(n_sites=n, diffusion=diffusion, velocity=velocity,
                     reaction_a=a, reaction_b=b, dx=1.0, dt=dt)


def rk4_logistic(phi0, a, b, t_end, dt=1e-3):
    """Dense Runge-Kutta reference for dphi/dt = -a phi + b phi^2."""
    def f(y):
        return -a * y + b * y * y

    y = float(phi0)
    for _ in range(int(round(t_end / dt))):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y += dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return y


# --- stencil matrix ---------------------------------------------------------------


def test_stencil_matrix_four_sites_frozen():
    a_matrix = build_linear_matrix(make_params(4))
    expected = np.array([
        [-3.0, 0.5, 0.0, 1.5],
        [1.5, -3.0, 0.5, 0.0],
        [0.0, 1.5, -3.0, 0.5],
        [0.5, 0.0, 1.5, -3.0],
    ])
    np.testing.assert_allclose(a_matrix, expected, rtol=0, atol=1e-15)


def test_stencil_profile_velocity_adds_divergence_term():
    profile = np.array([0.0, 1.0, 0.0, -1.0])
    a_matrix = build_linear_matrix(make_params(4, velocity=profile))
    # site 0 sees dU/dx = (U_1 - U_3)/2 = 1 on the diagonal
    assert a_matrix[0, 0] == pytest.approx(-4.0)
    assert a_matrix[2, 2] == pytest.approx(-2.0)
    # off-diagonals use the row's own velocity
    assert a_matrix[1, 2] == pytest.approx(1.0 - 0.5)
    assert a_matrix[1, 0] == pytest.approx(1.0 + 0.5)


def test_single_site_matrix_reduces_to_reaction():
    a_matrix = build_linear_matrix(make_params(1))
    np.testing.assert_allclose(a_matrix, [[-1.0]], atol=1e-15)


def test_two_site_wraparound_folds_both_neighbors():
    a_matrix = build_linear_matrix(make_params(2))
    # each neighbor entry is (D + U/2) + (D - U/2) = 2D
    np.testing.assert_allclose(a_matrix, [[-3.0, 2.0], [2.0, -3.0]], atol=1e-15)


@given(n=st.integers(min_value=1, max_value=17),
       velocity=st.floats(-3, 3),
       a=st.floats(0, 4),
       diffusion=st.floats(0, 3))
@settings(max_examples=60, deadline=None)
def test_row_sums_equal_minus_reaction(n, velocity, a, diffusion):
    params = make_params(n, velocity=velocity, a=a, diffusion=diffusion)
    sums = build_linear_matrix(params).sum(axis=1)
    np.testing.assert_allclose(sums, -a, atol=2e-13)


@given(n=st.integers(min_value=3, max_value=16), shift=st.integers(-20, 20),
       seed=st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_uniform_velocity_operator_commutes_with_lattice_shifts(n, shift, seed):
    params = make_params(n, velocity=0.7, a=0.3, diffusion=1.3)
    a_matrix = build_linear_matrix(params)
    phi = np.random.default_rng(seed).normal(size=n)
    lhs = a_matrix @ np.roll(phi, shift)
    rhs = np.roll(a_matrix @ phi, shift)
    np.testing.assert_allclose(lhs, rhs, atol=5e-14)


@given(seed=st.integers(0, 2**31), n=st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_transport_conserves_mass_without_reaction(seed, n):
    rng = np.random.default_rng(seed)
    params = make_params(n, velocity=rng.normal(size=n), a=0.0, b=0.0)
    phi = rng.normal(size=n)
    stepped = euler_step_nonlinear(phi, build_linear_matrix(params), 0.0, params.dt)
    assert stepped.sum() == pytest.approx(phi.sum(), abs=1e-12)


# --- stepping ----------------------------------------------------------------------


def test_single_site_euler_step_frozen():
    params = make_params(1)
    phi = np.array([1.0])
    stepped = euler_step_nonlinear(phi, build_linear_matrix(params), 0.6, 0.01)
    assert stepped[0] == pytest.approx(0.996, abs=1e-15)


def test_evolve_shape_and_initial_row():
    params = make_params(6)
    phi0 = InitialBox(width=3).field(6)
    traj = evolve_nonlinear(phi0, params, 40)
    assert traj.shape == (41, 6)
    np.testing.assert_array_equal(traj[0], phi0)


def test_evolved_field_tracks_rk4_logistic_per_site():
    # uniform field: transport cancels, every site follows the logistic ODE
    params = make_params(7, dt=1e-3)
    traj = evolve_nonlinear(np.full(7, 0.8), params, 1000)
    want = rk4_logistic(0.8, 1.0, 0.6, 1.0)
    np.testing.assert_allclose(traj[-1], want, atol=2e-3)


# --- initial conditions and velocity profiles ----------------------------------------


def test_box_placement_frozen():
    field = InitialBox(height=1.0, width=5).field(20)
    assert field[8:13].tolist() == [1.0] * 5
    assert field.sum() == pytest.approx(5.0)


def test_box_width_one_and_full():
    assert InitialBox(width=1).field(9)[4] == 1.0
    np.testing.assert_array_equal(InitialBox(width=9).field(9), np.ones(9))


def test_box_rejects_bad_width():
    with pytest.raises(ValueError):
        InitialBox(width=6).field(5)


def test_gaussian_velocity_profile_shape():
    profile = gaussian_velocity(20, u0=2.0)
    assert profile.shape == (20,)
    assert profile.max() == pytest.approx(2.0)
    assert np.argmax(profile) == 10
    assert profile[0] < 0.1


# --- derived numbers -----------------------------------------------------------------


def test_derived_numbers_frozen_at_defaults():
    nums = derived_numbers(make_params(20))
    assert nums.gamma_diffusion == pytest.approx(0.01)
    assert nums.gamma_advection == pytest.approx(0.01)
    assert nums.gamma_reaction == pytest.approx(0.01)
    assert nums.peclet_cell == pytest.approx(1.0)
    assert nums.damkohler_adv == pytest.approx(1.0)
    assert nums.damkohler_diff == pytest.approx(1.0)
    assert nums.lambda0 == pytest.approx(0.97)
    assert nums.lambda1 == pytest.approx(0.005)
    assert nums.lambda2 == pytest.approx(0.015)


def test_derived_numbers_zero_denominators_go_infinite():
    nums = derived_numbers(make_params(4, velocity=1.0, a=0.0, diffusion=0.0))
    assert nums.peclet_cell == np.inf
    assert nums.damkohler_adv == np.inf


def test_gamma_properties_reject_profiles():
    params = make_params(4, velocity=np.array([0.0, 1.0, 0.0, -1.0]))
    with pytest.raises(ValueError):
        params.gamma_advection


def test_params_validation():
    with pytest.raises(ValueError):
        make_params(0)
    with pytest.raises(ValueError):
        AdrParams(n_sites=4, diffusion=1.0, velocity=np.zeros(3), reaction_a=1.0,
                  reaction_b=0.0, dx=1.0, dt=0.01)
    with pytest.raises(ValueError):
        make_params(4, dt=-0.1)


# --- logistic references --------------------------------------------------------------


def test_logistic_exact_matches_rk4():
    for t_end in (0.5, 1.0, 3.0):
        want = rk4_logistic(1.0, 1.0, 0.6, t_end)
        assert logistic_exact(1.0, 1.0, 0.6, t_end) == pytest.approx(want, abs=1e-11)


def test_logistic_exact_rejects_blowup():
    # R >= 1 crosses the carrying capacity: denominator hits zero
    with pytest.raises(ValueError):
        logistic_exact(2.0, 1.0, 1.0, 5.0)


@given(ratio=st.floats(0.01, 0.9), order=st.integers(0, 30), t=st.floats(0.0, 8.0))
@settings(max_examples=80, deadline=None)
def test_logistic_truncation_within_bound(ratio, order, t):
    phi0, a = 1.0, 1.0
    b = ratio * a / phi0
    err = abs(logistic_exact(phi0, a, b, t) - logistic_carleman_truncated(phi0, a, b, t, order))
    assert err <= logistic_truncation_bound(phi0, a, b, order) + 1e-14


def test_logistic_truncated_converges_monotonically_in_order():
    errs = [abs(logistic_exact(1.0, 1.0, 0.6, 2.0)
                - logistic_carleman_truncated(1.0, 1.0, 0.6, 2.0, k)) for k in range(20)]
    assert all(e1 <= e0 for e0, e1 in zip(errs, errs[1:]))
    assert errs[-1] < 1e-5 < errs[0]


def test_logistic_truncated_order_zero_is_pure_decay():
    t = np.linspace(0.0, 3.0, 7)
    np.testing.assert_allclose(logistic_carleman_truncated(1.0, 1.0, 0.6, t, 0),
                               np.exp(-t), atol=1e-15)


# --- error series ---------------------------------------------------------------------


def test_relative_error_series_basics():
    ref = np.array([[1.0, 2.0], [1.0, 2.0], [0.5, 1.0]])
    test = np.array([[1.0, 2.0], [1.1, 2.0], [0.5, 1.2]])
    series = relative_error_series(ref, test)
    assert series.rel_err[0] == 0.0
    assert series.rel_err[1] == pytest.approx(0.1)
    assert series.rel_err[2] == pytest.approx(0.2)
    assert series.t_star_index == 2
    assert series.max_rel_err == pytest.approx(0.2)
    assert series.mean_rel_err_at_t_star == pytest.approx(0.1)  # (0 + 0.2) / 2


def test_relative_error_series_t_star_is_first_argmax():
    ref = np.ones((4, 1))
    test = np.array([[1.0], [1.3], [1.3], [1.0]])
    assert relative_error_series(ref, test).t_star_index == 1


def test_relative_error_series_guards_small_reference():
    ref = np.array([[1e-15, 1.0]])
    test = np.array([[5.0, 1.1]])
    series = relative_error_series(ref, test)
    # the first site is below the guard and must not dominate
    assert series.rel_err[0] == pytest.approx(0.1)
    assert not series.degenerate.any()


def test_relative_error_series_flags_degenerate_steps():
    ref = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
    test = ref + 0.05
    series = relative_error_series(ref, test)
    assert series.degenerate.tolist() == [False, True, False]
    assert np.isnan(series.rel_err[1])
    assert series.max_rel_err == pytest.approx(0.05)


def test_relative_error_series_raises_when_nothing_admitted():
    with pytest.raises(ValueError):
        relative_error_series(np.zeros((2, 3)), np.ones((2, 3)))
