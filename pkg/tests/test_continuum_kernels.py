import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi

from halfspace.continuum_kernels import (
    SQRT_2_OVER_PI, MeanderKernelParams, dirichlet_cell_mass, dirichlet_kernel, discrete_mass,
    heat_kernel, integrate, kernel_grid_csv, lp_error, meander_kernel, normal_cdf,
    quadrature_bound_audit, scaled_discrete_kernel, simpson, sup_error, survival_probability,
    two_phi_minus_one)
from halfspace.discrete_kernels import KernelWorkspace
from halfspace.errors import DomainError

# Phi(1) from adaptive quadrature of the Gaussian density, frozen
PHI_ONE = 0.8413447460685429


def test_phi_one_oracle():
    dens = lambda z: math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    val = 0.5 + spi.quad(dens, 0, 1, epsabs=1e-15)[0]
    assert val == pytest.approx(PHI_ONE, abs=1e-14)
    assert float(normal_cdf(1.0)) == pytest.approx(PHI_ONE, abs=1e-14)


def test_normal_cdf_symmetry():
    x = np.linspace(-8, 8, 401)
    assert float(normal_cdf(0.0)) == 0.5
    assert np.abs(normal_cdf(x) + normal_cdf(-x) - 1).max() <= 1e-12


def test_two_phi_minus_one_small_argument():
    eps = 1e-6
    assert float(two_phi_minus_one(eps)) / eps == pytest.approx(SQRT_2_OVER_PI, rel=1e-8)
    assert float(two_phi_minus_one(1e-12)) == pytest.approx(SQRT_2_OVER_PI * 1e-12, rel=1e-10)
    # against erf, which has no cancellation
    for e in (1e-5, 1e-3, 0.1, 2.0):
        assert float(two_phi_minus_one(e)) == pytest.approx(math.erf(e / math.sqrt(2)), rel=1e-12)


def test_dirichlet_kernel_examples():
    assert float(dirichlet_kernel(0.7, 1.3, 0.0)) == 0.0
    expected = (1 - math.exp(-2)) / math.sqrt(2 * math.pi)
    assert float(dirichlet_kernel(1.0, 1.0, 1.0)) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=100)
@given(st.floats(0.01, 5), st.floats(0, 5), st.floats(0, 5))
def test_dirichlet_kernel_symmetric(t, X, Y):
    assert abs(float(dirichlet_kernel(t, X, Y)) - float(dirichlet_kernel(t, Y, X))) <= 1e-12


def test_dirichlet_cell_mass_matches_quadrature():
    for t, X, lo, hi in [(0.3, 0.5, 0.2, 0.4), (1.0, 0.0, 0.0, 1.0), (2.0, 1.5, 1.0, 3.0)]:
        ref = spi.quad(lambda y: float(dirichlet_kernel(t, X, y)), lo, hi, epsabs=1e-14)[0]
        assert float(dirichlet_cell_mass(t, X, lo, hi)) == pytest.approx(ref, abs=1e-12)


def test_heat_kernel_integrates_to_one():
    assert integrate(lambda y: heat_kernel(0.4, y), -10, 10) == pytest.approx(1.0, abs=1e-10)


def test_meander_terminal_example():
    assert float(meander_kernel(1.0, 1.0, 0.0, 1.0)) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert float(meander_kernel(1.0, 1.0, 0.0, 1.0)) == pytest.approx(0.6065306597, abs=1e-10)


@pytest.mark.parametrize("t,T,X", [(0.5, 1, 0), (1, 1, 0), (0.5, 1, 1), (0.1, 2, 0.3),
                                   (2, 2, 1.5), (0.05, 1, 2)])
def test_meander_normalization(t, T, X):
    cut = X + 12 * math.sqrt(T)
    assert integrate(lambda y: meander_kernel(t, T, X, y), 0, cut, start=2048) == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("t,T", [(0.5, 1.0), (1.0, 1.0), (0.2, 3.0)])
def test_meander_small_start_limit(t, T):
    Y = np.linspace(0, 4, 41)
    assert np.abs(meander_kernel(t, T, 1e-6, Y) - meander_kernel(t, T, 0.0, Y)).max() <= 1e-4


@pytest.mark.parametrize("s,t,T,X,Z", [(0.3, 0.7, 1.0, 0.5, 1.2), (0.2, 1.0, 1.0, 0.0, 0.8),
                                       (0.5, 1.5, 2.0, 1.0, 0.4)])
def test_meander_semigroup(s, t, T, X, Z):
    f = lambda y: meander_kernel(s, T, X, y) * meander_kernel(t - s, T - s, y, Z)
    # the inner kernel from y = 0 uses its own branch; integrate on the open half line
    val = spi.quad(lambda y: float(f(np.array([y]))[0]) if y > 0 else 0.0,
                   0, X + 12 * math.sqrt(T), limit=200, epsabs=1e-12)[0]
    assert val == pytest.approx(float(meander_kernel(t, T, X, Z)), abs=1e-6)


@settings(max_examples=80)
@given(st.floats(0.05, 1.0), st.floats(1.05, 3.0), st.floats(0.01, 3), st.floats(0.01, 4))
def test_kernel_level_dirichlet_relation(frac, T, X, Y):
    t = frac * T * 0.95
    lhs = float(meander_kernel(t, T, X, Y)) * float(survival_probability(T, X))
    rhs = float(dirichlet_kernel(t, X, Y)) * float(survival_probability(T - t, Y))
    assert abs(lhs - rhs) <= 1e-12


def test_params_validation():
    with pytest.raises(DomainError):
        MeanderKernelParams(t=2, T=1, X=0)
    with pytest.raises(DomainError):
        meander_kernel(0.5, 1.0, -1.0, 1.0)
    assert MeanderKernelParams(0.5, 1.0, 1.0).y_cutoff == pytest.approx(11.0)


def test_simpson_exact_on_cubics():
    y = np.linspace(0, 2, 5)
    assert simpson(y ** 3, 0.5) == pytest.approx(4.0, abs=1e-14)
    with pytest.raises(DomainError):
        simpson(np.ones(4), 1.0)


WS = KernelWorkspace(10_000)


def test_discrete_mass_near_one():
    for n in (500, 1000, 2000):
        for t, T, X in [(0.5, 1, 0), (1, 1, 0), (0.5, 1, 1)]:
            assert abs(discrete_mass(WS, n, t, T, X) - 1) <= 1e-6


def test_scaled_kernel_terminal_shape():
    Y = np.linspace(0.5, 3, 6)
    err = np.abs(scaled_discrete_kernel(WS, 5000, 1, 1, 0, Y) - Y * np.exp(-Y * Y / 2)).max()
    assert err < 0.02


def test_kernel_convergence_monotone():
    Y = np.linspace(0, 4, 81)
    cases = [(0.5, 1, 0), (1, 1, 0), (0.5, 1, 1)]
    errs = [max(sup_error(WS, n, *c, Y) for c in cases) for n in (1000, 2000, 5000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 0.02


@pytest.mark.parametrize("p,a", [(1, 0), (2, 0), (1, 1), (2, 1)])
def test_lp_error_decreases(p, a):
    errs = [lp_error(WS, n, 0.5, 1.0, 0.5, p, a) for n in (500, 1000, 2000, 5000)]
    assert all(e1 > e2 for e1, e2 in zip(errs, errs[1:]))


def test_quadrature_audits():
    easy = quadrature_bound_audit("easy", {"a_values": [0.0], "t_values": [0.1, 0.5, 1.0]})
    assert easy.implied_constant == pytest.approx(1.0, abs=1e-8)
    dik = quadrature_bound_audit("dik", {"t_values": [0.01, 0.1, 1.0], "X_values": [0.0, 1.0]})
    assert math.isfinite(dik.implied_constant)
    spat = quadrature_bound_audit("spat", {"t_values": [0.5], "X_values": [0.5, 1.0]})
    assert math.isfinite(spat.implied_constant)


def test_kernel_grid_csv():
    lines = kernel_grid_csv(1.0, 1.0, 0.0, [1.0]).splitlines()
    assert lines[0] == "t,T,X,Y,value"
    assert lines[1].startswith("1.0,1.0,0.0,1.0,0.60653065")
