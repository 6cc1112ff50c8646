import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfspace.discrete_kernels import KernelWorkspace
from halfspace.errors import ConfigError, DomainError
from halfspace.meander_walks import enumerate_path_array
from halfspace.polymer import (
    BOUNDARY_ROW, BULK, DIAGONAL, OUTSIDE, BoundaryData, PartitionValue, WeightSpec,
    chaos_expansion_eval, chaos_second_moments, generate_boundary, generate_environment,
    holder_moment_audit, chaos_moment_envelope, loggamma_identity_experiment, loggamma_samples,
    loggamma_specs, mild_equation_residual, octant_normalization, octant_partition_dp,
    octant_reduction_experiment, octant_table, quadrant_partition_batch, quadrant_partition_dp,
    quadrant_partition_enum, quadrant_value_field, reduction_error, reduction_pathwise,
    rescaled_partition, sample_weights, stopping_time, octant_point_weights)
from halfspace.rng import RngStream

WS = KernelWorkspace(64)


def _octant_paths(p, q):
    """Brute force: every up-right lattice path (0,0) -> (p,q) that keeps i >= j."""
    out = []
    for steps in set(product("RU", repeat=p + q)):
        if steps.count("R") != p:
            continue
        i = j = 0
        pts = [(0, 0)]
        ok = True
        for s in steps:
            i, j = (i + 1, j) if s == "R" else (i, j + 1)
            if j > i:
                ok = False
                break
            pts.append((i, j))
        if ok:
            out.append(pts)
    return out


def _octant_brute(zeta, p, q):
    return sum(math.prod(zeta[i][j] for i, j in pts) for pts in _octant_paths(p, q))


def test_octant_examples():
    ones = np.ones((3, 3))
    assert octant_partition_dp(ones, 2).value == 2.0
    z = np.random.default_rng(0).random((4, 4)) + 0.5
    assert octant_partition_dp(z, 3, 0).value == pytest.approx(np.prod(z[:4, 0]), rel=1e-14)
    assert octant_partition_dp(z, 1).value == pytest.approx(z[0, 0] * z[1, 0] * z[1, 1], rel=1e-14)


def test_octant_ballot_numbers():
    # all-ones octant counts to (m, m) are Catalan numbers
    table = octant_table(np.ones((9, 9)))
    assert [int(table[m, m]) for m in range(9)] == [1, 1, 2, 5, 14, 42, 132, 429, 1430]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.data(), st.integers(0, 2**31))
def test_octant_dp_matches_brute_force(p, data, seed):
    q = data.draw(st.integers(0, p))
    z = np.random.default_rng(seed).random((p + 1, q + 1)) + 0.2
    assert octant_partition_dp(z, p, q).value == pytest.approx(_octant_brute(z, p, q), rel=1e-12)


def test_octant_endpoint_validation():
    with pytest.raises(DomainError):
        octant_partition_dp(np.ones((3, 3)), 1, 2)


def test_inverse_gamma_moments_and_scale():
    spec = WeightSpec("inverse_gamma", theta=5.0, scale=1.0)
    draws = sample_weights(spec, RngStream(1, 0), 1_000_000)
    se_mean = draws.std() / 1000
    assert abs(draws.mean() - 0.25) <= 3 * se_mean
    c = draws - draws.mean()
    var_se = math.sqrt((np.mean(c ** 4) - np.var(draws) ** 2) / draws.size)
    assert abs(np.var(draws, ddof=1) - 1 / 48) <= 3 * var_se
    doubled = sample_weights(WeightSpec("inverse_gamma", theta=5.0, scale=2.0), RngStream(1, 0), 1000)
    assert np.array_equal(doubled, 2 * draws[:1000])
    assert spec.mean == 0.25 and spec.variance == pytest.approx(1 / 48)


def test_weight_spec_validation():
    with pytest.raises(ConfigError):
        WeightSpec("inverse_gamma", theta=1.5)
    WeightSpec("inverse_gamma", theta=1.5, require_variance=False)
    with pytest.raises(ConfigError):
        WeightSpec("cauchy")


def test_loggamma_specs():
    bulk, special = loggamma_specs(9, A=0.5)
    assert bulk.theta == 6.0 and special.theta == 4.0
    assert bulk.scale == special.scale == 2.5
    # bulk mean is exactly 1/2: every bulk point carries the halving penalty
    assert bulk.mean == pytest.approx(0.5)


def test_environment_tags_and_streams():
    bulk, special = loggamma_specs(9)
    rng = RngStream(3, 0)
    e1 = generate_environment(bulk, "octant", (4, 4), rng, special, "diagonal")
    e2 = generate_environment(bulk, "octant", (4, 4), rng, special, "boundary_row")
    assert e1.region_tags[2, 2] == DIAGONAL and e1.region_tags[2, 1] == BULK
    assert e1.region_tags[1, 3] == OUTSIDE and e1.weights[1, 3] == 0.0
    assert e2.region_tags[3, 0] == BOUNDARY_ROW and e2.tag_name(3, 0) == "boundary_row"
    # bulk comes from the same child stream in both variants
    both = (e1.region_tags == BULK) & (e2.region_tags == BULK)
    assert np.array_equal(e1.weights[both], e2.weights[both])
    q = generate_environment(WeightSpec(), "quadrant", (6, 9), rng)
    assert q.weights.shape == (6, 9)


def test_boundary_independent_of_bulk():
    spec = WeightSpec()
    z_a = generate_boundary(spec, 16, 10, RngStream(5, 0).child(1))
    generate_environment(spec, "quadrant", (8, 12), RngStream(5, 0))
    generate_environment(spec, "quadrant", (8, 12), RngStream(6, 0))
    z_b = generate_boundary(spec, 16, 10, RngStream(5, 0).child(1))
    assert np.array_equal(z_a.values, z_b.values)
    assert np.allclose(z_a.values, np.cumprod(1 + 16 ** -0.25 * z_a.omega))


def test_partition_value_rejects_nonfinite():
    with pytest.raises(ArithmeticError):
        PartitionValue(float("nan"), "octant", (1, 1), 1)


def _quadrant_brute(omega, z0, x, beta):
    """Average over all non-negative paths, built with itertools."""
    L = omega.shape[0]
    total, count = 0.0, 0
    for steps in product((-1, 1), repeat=L):
        s = [x]
        for d in steps:
            s.append(s[-1] + d)
        if min(s) < 0:
            continue
        count += 1
        total += z0[s[-1]] * math.prod(1 + beta * omega[t, s[t]] for t in range(L))
    return total / count


def test_quadrant_zero_disorder():
    z0 = np.linspace(1, 3, 40)
    omega = np.zeros((10, 40))
    assert quadrant_partition_dp(WS, omega, np.ones(40), 3, 0.5).value == pytest.approx(1.0, abs=1e-14)
    expected = WS.conditioned_row(10, 10, 3, 39) @ z0
    assert quadrant_partition_dp(WS, omega, z0, 3, 0.5).value == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("seed", range(10))
def test_quadrant_dp_enum_chaos_agree(seed):
    rng = np.random.default_rng(seed)
    L, x = 8, int(rng.integers(0, 3))
    omega = rng.normal(size=(L, x + L + 3))
    z0 = np.abs(rng.normal(size=x + L + 3)) + 0.1
    beta = 8 ** -0.25
    brute = _quadrant_brute(omega, z0, x, beta)
    assert quadrant_partition_dp(WS, omega, z0, x, beta).value == pytest.approx(brute, rel=1e-12)
    assert quadrant_partition_enum(omega, z0, x, beta) == pytest.approx(brute, rel=1e-12)
    total, terms = chaos_expansion_eval(WS, omega, z0, x, beta)
    assert total == pytest.approx(brute, rel=1e-10)
    assert terms[0] == pytest.approx(WS.conditioned_row(L, L, x, x + L) @ z0[: x + L + 1], rel=1e-13)


def test_quadrant_batch_and_value_field_consistent():
    rng = np.random.default_rng(4)
    L, W = 10, 16
    omega = rng.normal(size=(3, L, W))
    z0 = np.abs(rng.normal(size=(3, W))) + 0.5
    batch = quadrant_partition_batch(WS, omega, z0, 2, 0.3)
    for r in range(3):
        V = quadrant_value_field(WS, omega[r], z0[r], 0.3)
        assert V[0, 2] == pytest.approx(batch[r], rel=1e-12)


def test_mild_equation_residual():
    rng = np.random.default_rng(9)
    omega = rng.normal(size=(8, 14))
    z0 = np.abs(rng.normal(size=14)) + 0.5
    assert mild_equation_residual(WS, omega, z0, 0.4) <= 1e-12


def test_loggamma_partition_strictly_positive():
    z = loggamma_samples(9, 3, 0.0, 1, 2000, seed=1, workers=1)
    assert np.all(z > 0)


def test_mean_formula_by_monte_carlo():
    rng = np.random.default_rng(12)
    L, x, W = 8, 2, 12
    omega = rng.normal(size=(20_000, L, W))
    z0 = np.linspace(0.5, 2, W)
    vals = quadrant_partition_batch(WS, omega, z0, x, 0.5)
    target = WS.conditioned_row(L, L, x, W - 1) @ z0
    assert abs(vals.mean() - target) <= 3 * vals.std() / math.sqrt(vals.size)


def test_chaos_second_moments_and_envelope():
    S = chaos_second_moments(WS, 0, 8, 4)
    assert S[0] == 1.0 and np.all(S > 0)
    env = chaos_moment_envelope(WS, 0, 8, 4)
    k = np.arange(5)
    bound = env["B"] * env["C"] ** k * 8 ** (k / 2) / np.array([math.gamma(kk / 2 + 1) for kk in k])
    assert np.all(np.asarray(env["S"]) <= bound * (1 + 1e-12))


def test_chaos_term_variances_by_monte_carlo():
    """E[term_r^2] under standard normal disorder equals beta^{2r} times a sum of squared kernels."""
    rng = np.random.default_rng(2)
    L, x, beta = 6, 1, 0.5
    W = x + L + 1
    K = lambda d, N: WS.conditioned_matrix(d, N, W - 1, W - 1)
    exact1 = sum(float(np.sum(K(i, L)[x] ** 2)) for i in range(L))
    exact2 = sum(float(K(i, L)[x] ** 2 @ (K(j - i, L - i) ** 2).sum(axis=1))
                 for i in range(L) for j in range(i + 1, L))
    R = 4000
    sq = np.zeros(3)
    for _ in range(R):
        _, terms = chaos_expansion_eval(WS, rng.normal(size=(L, W)), np.ones(W), x, beta, max_order=2)
        sq += np.square(terms)
    assert sq[0] / R == pytest.approx(1.0)
    assert sq[1] / R == pytest.approx(beta ** 2 * exact1, rel=0.08)
    assert sq[2] / R == pytest.approx(beta ** 4 * exact2, rel=0.15)


def test_stopping_time():
    assert stopping_time([0, 1, 2, 3, 4], 2) == 2
    assert stopping_time([0, 1, 0, 1, 0], 2) == 3
    assert stopping_time([1, 0, 1, 0, 1], 2) == 4


def test_reduction_dp_matches_enumeration():
    rng = np.random.default_rng(7)
    n, x = 4, 1
    L = 2 * n
    W = x + L + 2
    omega = rng.normal(size=(1, L + 1, W))
    z0 = np.cumprod(1 + n ** -0.25 * rng.normal(size=W))
    paths = enumerate_path_array(x, L)
    brute = np.mean([reduction_pathwise(p, omega[0], z0, n ** -0.25, n) for p in paths])
    assert reduction_error(WS, omega, z0[None], x, n, n ** -0.25)[0] == pytest.approx(brute, abs=1e-12)


def test_reduction_vanishes_without_disorder():
    n, x = 6, 2
    W = x + 2 * n + 2
    err = reduction_error(WS, np.zeros((1, 2 * n + 1, W)), np.ones((1, W)), x, n, 0.3)
    assert abs(err[0]) <= 1e-14


def test_reduction_pathwise_zero_when_never_stopped_early():
    path = np.array([1, 0, 1, 0, 1])
    omega = np.random.default_rng(0).normal(size=(5, 6))
    assert stopping_time(path, 2) == 4
    assert reduction_pathwise(path, omega, np.ones(6), 0.5, 2) == 0.0


def test_reduction_experiment_shape():
    rows = octant_reduction_experiment(1, [2, 4], 300, seed=3, workers=2)
    assert [r["n"] for r in rows] == [2, 4]
    assert all(r["samples"] == 300 and r["mean_abs_error"] >= 0 for r in rows)


def test_octant_normalization_small_argument():
    for n in (10 ** 6, 10 ** 8):
        for T in (0.5, 1.0, 2.0):
            eps = n ** -0.5 / math.sqrt(T)
            series = math.sqrt(2 / math.pi) * eps * (1 - eps ** 2 / 6)
            assert octant_normalization(n, T, 0.0) == pytest.approx(1 / series, rel=1e-6)
    assert octant_normalization(10 ** 4, 1.0, 20.0) == pytest.approx(1.0, abs=1e-12)


def test_rescaled_partition_interpolation_at_lattice_points():
    z = np.random.default_rng(1).random((40, 40)) + 0.5
    Z = octant_table(z)
    n, T, X = 16, 1.0, 0.5
    pv = rescaled_partition(Z, n, T, X)
    assert pv.value == pytest.approx(Z[18, 16] * octant_normalization(n, T, X), rel=1e-13)
    mid = rescaled_partition(Z, n, 1.0, 0.5625).value / octant_normalization(n, 1.0, 0.5625)
    assert mid == pytest.approx(0.75 * Z[18, 16] + 0.25 * Z[19, 16], rel=1e-13)


def test_octant_point_weights():
    om = np.array([[1.0, 2.0]])
    special = np.array([[True, False]])
    w = octant_point_weights(om, 16, special)
    assert w[0, 0] == pytest.approx(1.5)
    assert w[0, 1] == pytest.approx(0.5 * (1 + 64 ** -0.25 * 2))


def test_loggamma_self_test_passes():
    rep = loggamma_identity_experiment(9, m=3, samples=5000, seed=2, workers=2, self_test=True)
    assert rep.passed and rep.name == "loggamma_identity_self"


def test_holder_audit_finite():
    rows = holder_moment_audit([8, 16], 1.0, [0.0, 0.5, 1.0], 2, 200, seed=1, workers=2)
    for r in rows:
        assert all(math.isfinite(r[k]) and r[k] > 0 for k in ("one_point", "spatial", "temporal"))


def test_holder_equal_points_give_zero_numerator():
    rows = holder_moment_audit([8], 1.0, [0.5, 0.5], 2, 50, seed=1, workers=1)
    assert rows[0]["spatial"] == 0.0


def test_boundary_constant():
    b = BoundaryData.constant(4, 2.0)
    assert b.values.tolist() == [2.0] * 5
