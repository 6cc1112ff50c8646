import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfspace.continuum_kernels import SQRT_2_OVER_PI, dirichlet_cell_mass, two_phi_minus_one
from halfspace.errors import ConfigError, DomainError
from halfspace.rng import RngStream
from halfspace.she_chaos import (
    GridParams, InitialData, coarsen_noise, derivative_limit_experiment, dirichlet_relation_check,
    evaluate_final, field_csv, gbm_covariance, gbm_values, mean_check, noise_self_test,
    picard_solve, polymer_to_she_convergence, relation_mismatch, second_moment_series,
    solve_batch, truncation_decay, wall_derivative_quadrature)

SMALL = GridParams(0.05, 0.25, T_max=1.0, X_max=3.0, K=4)


def _noise(seed, grid=SMALL, shape=()):
    return RngStream(seed, 0).normal((*shape, grid.N, grid.M))


def test_grid_validation():
    with pytest.raises(ConfigError):
        GridParams(0.03, 0.1, T_max=1.0)
    with pytest.raises(ConfigError):
        GridParams(0.1, 0.1, K=17)
    g = GridParams(0.1, 0.5, T_max=1.0, X_max=2.0)
    assert g.N == 10 and g.M == 4
    assert g.x_out.tolist() == [0.0, 0.25, 0.75, 1.25, 1.75]
    assert g.refined().dt == 0.05


def test_zero_noise_gives_deterministic_term():
    cg = picard_solve(SMALL, InitialData.constant(SMALL), noise=np.zeros((SMALL.N, SMALL.M)))
    assert np.all(cg.iterates[1:] == 0)
    assert np.array_equal(cg.solution, cg.iterates[0])


def test_zero_noise_dirichlet_route_is_exact_cell_mass():
    g = GridParams(0.05, 0.1, 1.0, 4.0, K=2)
    cg = picard_solve(g, InitialData.constant(g), noise=np.zeros((g.N, g.M)), route="dirichlet")
    X = g.midpoints
    exact = np.array([float(dirichlet_cell_mass(1.0, x, 0.0, 4.0)) for x in X])
    assert np.abs(cg.solution[-1, 1:] - exact).max() <= 1e-12
    assert np.all(cg.solution[:, 0] == 0)


def test_zero_noise_relation_is_quadrature_accurate_and_refines():
    coarse = GridParams(0.05, 0.2, 1.0, 4.0, K=1)
    errs = []
    for g in (coarse, coarse.refined()):
        mm, _, _ = relation_mismatch(g, InitialData.constant(g), np.zeros((g.N, g.M)))
        errs.append(mm)
    assert errs[1] < errs[0] < 5e-3


def test_wall_value_matches_derivative_quadrature_without_noise():
    g = GridParams(0.02, 0.05, 1.0, 6.0, K=1)
    f = lambda y: 1.0 + 0.5 * np.sin(y)
    cg = picard_solve(g, InitialData.function(f, g), noise=np.zeros((g.N, g.M)))
    deriv = wall_derivative_quadrature(1.0, f)
    assert cg.solution[-1, 0] * SQRT_2_OVER_PI == pytest.approx(deriv, rel=1e-3)
    # constant data: the derivative of 2 Phi(X/sqrt T) - 1 at 0
    assert wall_derivative_quadrature(1.0, np.ones_like) == pytest.approx(SQRT_2_OVER_PI, rel=1e-9)


def test_prefactor_small_x():
    X = 1e-6
    for T in (0.5, 1.0, 2.0):
        assert float(two_phi_minus_one(X / math.sqrt(T))) / X == pytest.approx(
            SQRT_2_OVER_PI / math.sqrt(T), rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.2, 3.0), st.floats(-2, 2))
def test_linearity_and_scaling(seed, lam, shift):
    g = SMALL
    xi = _noise(seed)
    f1 = InitialData.function(lambda y: 1.0 + 0.3 * y, g)
    f2 = InitialData.function(lambda y: np.exp(-y) + 0.1, g)
    s1 = picard_solve(g, f1, noise=xi).solution
    s2 = picard_solve(g, f2, noise=xi).solution
    both = InitialData("function", f1.values + f2.values, f1.points, f1.wall + f2.wall)
    s12 = picard_solve(g, both, noise=xi).solution
    assert np.allclose(s12, s1 + s2, rtol=1e-12, atol=1e-12)
    scaled = InitialData("function", lam * f1.values, f1.points, lam * f1.wall)
    assert np.allclose(picard_solve(g, scaled, noise=xi).solution, lam * s1, rtol=1e-12, atol=1e-12)


def test_chaos_orthogonality():
    g = SMALL
    data = InitialData.constant(g)
    xi = _noise(3, shape=(4000,))
    it = solve_batch(g, data.values, data.wall, xi, "normalized")[:, :, -1, 3]
    for j in range(3):
        for k in range(j + 1, 4):
            prod = it[:, j] * it[:, k]
            assert abs(prod.mean()) <= 3 * prod.std() / math.sqrt(prod.size)


def test_second_moment_series_matches_monte_carlo():
    g = SMALL
    data = InitialData.constant(g)
    F = second_moment_series(g, data.covariance(), K=3)
    xi = _noise(8, shape=(6000,))
    it = solve_batch(g, data.values, data.wall, xi, "normalized")
    for k in (1, 2, 3):
        sq = it[:, k, -1, :] ** 2
        se = sq.std(axis=0) / math.sqrt(sq.shape[0])
        assert np.all(np.abs(sq.mean(axis=0) - F[k, -1]) <= 4 * se + 1e-12)
    assert np.allclose(F[0, -1], it[0, 0, -1] ** 2)


def test_truncation_decay_eventually_decreasing():
    g = GridParams(0.05, 0.25, 1.0, 3.0, K=8)
    rep = truncation_decay(g, InitialData.constant(g))
    assert rep["eventually_decreasing"]
    assert rep["F"][-1] < rep["F"][1]


def test_gbm_covariance_by_monte_carlo():
    g = SMALL
    rng = np.random.default_rng(0)
    vals = gbm_values(g, rng.standard_normal((200_000, g.M)), 0.1, 0.8)
    emp = vals.T @ vals / vals.shape[0]
    assert np.allclose(emp, gbm_covariance(g.midpoints, 0.1, 0.8), rtol=0.05)


def test_mean_check_passes():
    g = GridParams(0.05, 0.1, 1.0, 3.0, K=4)
    rep = mean_check(g, 2000, seed=1, workers=2)
    assert rep.passed, rep.details


def test_noise_self_test():
    assert noise_self_test(SMALL, 4).passed


def test_coarsen_noise_is_standard_and_nested():
    fine = RngStream(1, 0).normal((200, 64, 64))
    coarse = coarsen_noise(fine)
    assert coarse.shape == (200, 32, 32)
    assert coarse[0, 0, 0] == pytest.approx(fine[0, :2, :2].sum() / 2)
    assert abs(coarse.std() - 1) < 0.01
    with pytest.raises(DomainError):
        coarsen_noise(np.zeros((3, 4)))


def test_dirichlet_relation_check_small():
    g = GridParams(0.04, 0.2, 1.0, 3.2, K=4)
    rep = dirichlet_relation_check(g, seed=1, tolerance=0.05, realizations=4)
    assert rep.details["levels"][0]["dirichlet_wall_max"] == 0.0
    assert rep.passed, rep.details


def test_derivative_limit_ladder():
    g = GridParams(0.02, 0.05, 1.0, 3.0, K=4)
    rep = derivative_limit_experiment(g, [0.4, 0.2, 0.1, 0.05], seed=2, realizations=16)
    assert rep.passed, rep.details


def test_evaluate_final_matches_grid_columns():
    cg = picard_solve(SMALL, InitialData.constant(SMALL), noise=_noise(5))
    X = SMALL.midpoints[:4]
    assert np.allclose(evaluate_final(cg, X), cg.solution[-1, 1:5], rtol=1e-12)


def test_polymer_to_she_zero_disorder_exact():
    rep = polymer_to_she_convergence([8, 16], 1.0, 0.5, 64, seed=1, workers=1, zero_disorder=True)
    assert rep["spde_mean"] == pytest.approx(1.0, abs=1e-9)
    for row in rep["ladder"]:
        assert row["mean"] == pytest.approx(1.0, abs=1e-12)
        assert row["variance"] == pytest.approx(0.0, abs=1e-20)


def test_field_csv_header():
    cg = picard_solve(SMALL, InitialData.constant(SMALL), noise=np.zeros((SMALL.N, SMALL.M)))
    lines = field_csv(cg).splitlines()
    assert lines[0] == "T,X,value"
    assert len(lines) == 1 + (SMALL.N + 1) * (SMALL.M + 1)
