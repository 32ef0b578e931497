import math

import numpy as np
import pytest

from lognsum import (ConvergenceError, DomainError, LognormalModel, asymptotic_lemma_check,
                     cumulants, gamma_of_x, theta_solve, theta_tilde, tilted_mean_exact)

M25 = LognormalModel(0.25)

# x, E at theta_tilde, theta_tilde, theta
TABLE1 = [
    (1.0, 0.99905160, 0.5002255, 0.4850103),
    (0.9, 0.89695877, 2.4295388, 2.3625893),
    (0.8, 0.79589537, 5.0894397, 4.9624633),
    (0.7, 0.69554784, 8.8690980, 8.6691868),
    (0.5, 0.49617443, 23.1845282, 22.7639315),
    (0.3, 0.29767635, 65.8850274, 64.9626105),
    (0.1, 0.09934273, 373.4301331, 369.9235664),
]
U_GRID = np.logspace(-3, -12, 10)


def test_gamma_at_one():
    assert gamma_of_x(M25, 1.0) == pytest.approx((-1 + math.sqrt(1.125)) / 2, rel=1e-15)


def test_gamma_solves_quadratic():
    for x in (1e-6, 0.1, 0.5, 0.99):
        g = gamma_of_x(M25, x)
        lx = math.log(x)
        assert g * g + (1 + lx) * g - M25.s2 / 2 + lx == pytest.approx(0.0, abs=1e-12)


def test_gamma_small_x():
    assert abs(gamma_of_x(M25, 1e-6) - 13.8155) < 0.5


@pytest.mark.parametrize("x,mean,tt,th", TABLE1)
def test_table_theta_tilde(x, mean, tt, th):
    assert theta_tilde(M25, x) == pytest.approx(tt, abs=5e-7 * max(1.0, tt / 10))
    assert round(theta_tilde(M25, x), 7) == pytest.approx(tt, abs=1.5e-7)


@pytest.mark.parametrize("x,mean,tt,th", TABLE1)
def test_table_theta(x, mean, tt, th):
    sol = theta_solve(M25, x)
    assert sol.theta == pytest.approx(th, abs=1e-6)
    assert sol.iterations <= 4
    assert abs(sol.residual) <= 1e-10 * x
    assert sol.theta_tilde == theta_tilde(M25, x)


@pytest.mark.parametrize("x,mean,tt,th", TABLE1)
def test_table_mean_at_theta_tilde(x, mean, tt, th):
    got = tilted_mean_exact(M25, theta_tilde(M25, x))
    assert got == pytest.approx(mean, abs=5e-7)
    assert abs(got - x) / x <= 1e-2


def test_theta_tilde_matches_lognormal_mean_equation():
    for x in (0.1, 0.5, 0.9):
        g = gamma_of_x(M25, x)
        # W(theta_tilde sigma^2) = gamma, so exp(mu + s2/2) = x
        assert math.exp(-g + 0.5 * M25.s2 / (1 + g)) == pytest.approx(x, rel=1e-13)


def test_not_in_left_tail():
    with pytest.raises(DomainError, match="left tail"):
        theta_tilde(M25, M25.mean)
    with pytest.raises(DomainError):
        theta_solve(M25, 1.5)
    with pytest.raises(DomainError):
        gamma_of_x(M25, -1.0)


def test_convergence_error_carries_last_iterate():
    with pytest.raises(ConvergenceError) as info:
        theta_solve(M25, 0.1, max_iter=1)
    assert info.value.last > 0
    assert info.value.last != theta_tilde(M25, 0.1)


def test_fixed_point_round_trip():
    x = -cumulants(M25, 10.0).d1
    assert theta_solve(M25, x).theta == pytest.approx(10.0, rel=1e-9)


def test_consistency_chain():
    for x in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
        th = theta_solve(M25, x).theta
        assert tilted_mean_exact(M25, th) == pytest.approx(x, rel=1e-8)


def test_monotone_in_x():
    xs = np.linspace(0.05, 1.02, 40)
    tt = [theta_tilde(M25, x) for x in xs]
    th = [theta_solve(M25, x).theta for x in xs]
    assert np.all(np.diff(tt) < 0) and np.all(np.diff(th) < 0)


def test_damped_step_keeps_theta_positive():
    sol = theta_solve(LognormalModel(1.0), 1.6)
    assert sol.theta > 0


def test_lemma_grid_validation():
    with pytest.raises(DomainError):
        asymptotic_lemma_check(M25, [0.5])


def test_lemma_gamma_minus_log_shrinks():
    r = asymptotic_lemma_check(M25, U_GRID)
    assert np.all(np.diff(np.abs(r.gamma_minus_log)) < 0)


def test_lemma_limit1_scaled_residual_bounded():
    r = asymptotic_lemma_check(M25, U_GRID)
    assert np.all(np.abs(r.limit1) <= 1.0)


def test_lemma_limit3_small_at_1e8():
    # red by design: with the stated constant 1 the unscaled remainder is
    # about -0.53 at u = 1e-8; with the constant 1/2 it is about -0.026,
    # since the remainder then decays only like 1/|log u|
    r = asymptotic_lemma_check(M25, [1e-8])
    unscaled = r.limit3[0] / r.log_abs[0] ** 2
    assert abs(unscaled) < 0.01


def test_lemma_limit2_residual_decreasing():
    # red by design: with the stated constant 1 the remainder tends to -1/2
    # and its scaled form grows in magnitude along the grid
    r = asymptotic_lemma_check(M25, U_GRID)
    assert np.all(np.diff(np.abs(r.limit2)) < 0)


def test_lemma_residuals_bounded_with_exact_constants():
    r = asymptotic_lemma_check(M25, U_GRID, constants="exact")
    for arr in (r.limit1, r.limit2, r.limit3):
        assert np.all(np.isfinite(arr))
        assert np.ptp(arr) < 0.1
    assert np.all(np.abs(r.limit1) < 0.05)
    assert np.all(np.abs(r.limit2) < 0.01)
    assert np.all(np.abs(r.limit3) < 0.5)
