"""Closed forms and the power-series solution for the unit-jump family."""

import numpy as np
import pytest
from scipy import stats

from glevy import (
    GPoissonSpec,
    Payoff,
    SchemeConfig,
    evaluate,
    g_lambda,
    gpoisson_closed_form,
    interpolate,
    series_solution,
    solve,
    uniform_grid,
)
from glevy.errors import GLevyError


def x1(x):
    return np.asarray(x, dtype=float)[..., 0]


def clipped_identity(level):
    return Payoff(eval=lambda x, c=level: np.clip(x1(x), -c, c), bound=level, lipschitz=1.0)


def poisson_sum(f, mu, x):
    """Brute-force classical series, tail-summed far past the mass range."""
    ks = np.arange(0, max(40, int(10 * mu + 40)))
    return float(np.sum(stats.poisson.pmf(ks, mu) * f(np.stack([x + ks], axis=-1))))


def test_g_lambda_examples():
    assert g_lambda(2.0, 0.5) == 2.0
    assert g_lambda(-2.0, 0.5) == -1.0
    assert g_lambda(0.0, 0.9) == 0.0


def test_g_lambda_is_max_of_scaled():
    for lam in (0.0, 0.3, 1.0):
        for a in np.linspace(-3.0, 3.0, 121):
            assert g_lambda(a, lam) == max(a, lam * a)


def test_g_lambda_range_check():
    with pytest.raises(GLevyError) as e:
        g_lambda(1.0, 1.5)
    assert e.value.code == "LAMBDA_RANGE"


def test_spec_uncertainty_set():
    spec = GPoissonSpec(lambda_low=0.5)
    uset = spec.uncertainty_set()
    assert uset.mass_bound == 1.0
    assert len(spec.jump_measures()) == 2
    with pytest.raises(GLevyError):
        GPoissonSpec(lambda_low=-0.1)


def test_closed_form_mean_identities():
    phi = clipped_identity(1e6)
    assert abs(gpoisson_closed_form(phi, "increasing", 0.5, 1.0, 0.0) - 1.0) < 1e-9
    neg = Payoff(eval=lambda x: np.clip(-x1(x), -1e6, 1e6), bound=1e6, lipschitz=1.0)
    assert abs(gpoisson_closed_form(neg, "decreasing", 0.5, 1.0, 0.0) + 0.5) < 1e-9


def test_closed_form_constant():
    const = Payoff(eval=lambda x: np.full(np.asarray(x, float).shape[:-1], 0.7), bound=0.7, lipschitz=0.0)
    for lam, t in ((0.0, 1.0), (0.3, 0.5), (1.0, 2.0)):
        v = gpoisson_closed_form(const, "increasing", lam, t, 1.3, tol=1e-12)
        assert abs(v - 0.7) < 1e-11
        v = gpoisson_closed_form(const, "decreasing", lam, t, 1.3, tol=1e-12)
        assert abs(v - 0.7) < 1e-11


def test_closed_form_matches_brute_series():
    up = Payoff(eval=lambda x: np.tanh(x1(x)), bound=1.0, lipschitz=1.0)
    dn = Payoff(eval=lambda x: -np.tanh(x1(x)), bound=1.0, lipschitz=1.0)
    for lam in (0.0, 0.3, 1.0):
        for t in (0.5, 1.0, 2.0):
            got = gpoisson_closed_form(up, "increasing", lam, t, -0.4, tol=1e-12)
            want = poisson_sum(up.eval, t, -0.4)
            assert abs(got - want) < 1e-10
            got = gpoisson_closed_form(dn, "decreasing", lam, t, -0.4, tol=1e-12)
            want = poisson_sum(dn.eval, lam * t, -0.4)
            assert abs(got - want) < 1e-10


def test_increasing_direction_equals_intensity_one_classical():
    payoff = Payoff(
        eval=lambda x: np.clip((x1(x) - 0.5) / 2.0, 0.0, 1.0), bound=1.0, lipschitz=0.5
    )
    for lam in (0.0, 0.3, 1.0):
        upper = gpoisson_closed_form(payoff, "increasing", lam, 0.8, 0.0, tol=1e-12)
        classical = gpoisson_closed_form(payoff, "increasing", 1.0, 0.8, 0.0, tol=1e-12)
        assert abs(upper - classical) < 1e-10


def test_lambda_one_directions_agree():
    payoff = Payoff(eval=lambda x: np.tanh(x1(x)), bound=1.0, lipschitz=1.0)
    up = gpoisson_closed_form(payoff, "increasing", 1.0, 0.8, -0.3, tol=1e-12)
    dn = gpoisson_closed_form(payoff, "decreasing", 1.0, 0.8, -0.3, tol=1e-12)
    assert abs(up - dn) < 1e-10


def test_closed_form_input_checks():
    phi = clipped_identity(1.0)
    with pytest.raises(GLevyError) as e:
        gpoisson_closed_form(phi, "sideways", 0.5, 1.0, 0.0)
    assert e.value.code == "BAD_DIRECTION"
    with pytest.raises(GLevyError) as e:
        gpoisson_closed_form(phi, "increasing", 0.5, 1.0, 0.0, tol=0.0)
    assert e.value.code == "BAD_TOLERANCE"
    with pytest.raises(GLevyError) as e:
        gpoisson_closed_form(phi, "increasing", 2.0, 1.0, 0.0)
    assert e.value.code == "LAMBDA_RANGE"


def test_series_constant_stays_constant():
    grid = uniform_grid([-5.0], [5.0], 0.1)
    const = Payoff(eval=lambda x: np.full(np.asarray(x, float).shape[:-1], -0.4), bound=0.4, lipschitz=0.0)
    g = series_solution(const, grid, [[(1.0, 1.0)]], 1.0, tol=1e-10)
    assert np.max(np.abs(g.values + 0.4)) < 1e-12


def test_series_classical_ramp_matches_oracle():
    grid = uniform_grid([-6.0], [12.0], 0.05)
    ramp = Payoff(eval=lambda x: np.clip(x1(x), 0.0, 1.0), bound=1.0, lipschitz=1.0)
    g = series_solution(ramp, grid, [[(1.0, 1.0)]], 1.0, tol=1e-10)
    want = poisson_sum(ramp.eval, 1.0, 0.0)
    assert abs(interpolate(g, [0.0]) - want) < 1e-9


def test_series_gpoisson_matches_closed_form_on_identity():
    # linear data keeps every forward difference at one, where the series
    # recursion and the worst-case semigroup genuinely coincide
    spec = GPoissonSpec(lambda_low=0.5)
    grid = uniform_grid([-8.0], [8.0], 0.05)
    phi = clipped_identity(6.0)
    g = series_solution(phi, grid, spec.jump_measures(), 0.5, tol=1e-8)
    want = gpoisson_closed_form(phi, "increasing", 0.5, 0.5, 0.0, tol=1e-10)
    assert abs(interpolate(g, [0.0]) - want) < 5 * 0.05 + 1e-8


def test_series_matches_solver_on_singleton():
    grid = uniform_grid([-8.0], [8.0], 0.05)
    phi = Payoff(eval=lambda x: np.cos(x1(x)), bound=1.0, lipschitz=1.0)
    g = series_solution(phi, grid, [[(1.0, 1.0)]], 0.5, tol=1e-8)
    uset_spec = GPoissonSpec(lambda_low=1.0)
    res = solve(
        phi,
        uset_spec.uncertainty_set(),
        grid,
        SchemeConfig(cfl_safety=0.05, final_time=0.5),
    )
    gap = abs(interpolate(g, [0.0]) - evaluate(res, 0.5, [0.0]))
    assert gap < 5 * 0.05 + 1e-8


def test_series_truncation_honors_tolerance():
    grid = uniform_grid([-6.0], [6.0], 0.1)
    phi = Payoff(eval=lambda x: np.cos(x1(x)), bound=1.0, lipschitz=1.0)
    rough = series_solution(phi, grid, [[(1.0, 1.0)]], 1.0, tol=1e-4)
    fine = series_solution(phi, grid, [[(1.0, 1.0)]], 1.0, tol=1e-12)
    assert np.max(np.abs(rough.values - fine.values)) < 1e-4


def test_series_rejects_bad_inputs():
    grid = uniform_grid([-2.0], [2.0], 0.1)
    phi = clipped_identity(1.0)
    with pytest.raises(GLevyError) as e:
        series_solution(phi, grid, [], 1.0)
    assert e.value.code == "EMPTY_SET"
    with pytest.raises(GLevyError) as e:
        series_solution(phi, grid, [[(1.0, 1.0)]], -1.0)
    assert e.value.code == "BAD_SHAPE"
