import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfspace.errors import DomainError, StatisticalError
from halfspace.stattests import (
    TestReport, exact_law_distance, kolmogorov_sf, ks_one_sample, ks_statistic, ks_two_sample,
    mean_against, moment_compare, subgaussian_fit)
from halfspace.continuum_kernels import normal_cdf


def test_ks_examples():
    rep = ks_two_sample([3, 1, 2], [2, 3, 1])
    assert rep.statistic == 0.0 and rep.p_value == 1.0
    assert ks_statistic([0], [1]) == 1.0
    assert ks_statistic([1, 2], [1.5, 2.5]) == 0.5


def test_ks_statistic_against_brute_force():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=37), rng.normal(0.3, size=23)
    grid = np.concatenate([a, b])
    brute = max(abs((a <= g).mean() - (b <= g).mean()) for g in grid)
    assert ks_statistic(a, b) == brute


samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


@settings(max_examples=100)
@given(samples, samples, st.randoms())
def test_ks_permutation_invariant(a, b, r):
    a2, b2 = list(a), list(b)
    r.shuffle(a2)
    r.shuffle(b2)
    assert ks_statistic(a, b) == ks_statistic(a2, b2)


int_samples = st.lists(st.integers(-1000, 1000), min_size=1, max_size=40)


@settings(max_examples=100)
@given(int_samples, int_samples)
def test_ks_monotone_transform_invariant(a, b):
    # integer inputs keep the cubic exactly representable, hence strictly increasing
    f = lambda v: np.asarray(v, dtype=float) ** 3 + 5.0 * np.asarray(v, dtype=float)
    assert ks_statistic(a, b) == ks_statistic(f(a), f(b))


def test_ks_null_pvalues_roughly_uniform():
    ps = []
    for s in range(200):
        rng = np.random.default_rng(s)
        ps.append(ks_two_sample(rng.normal(size=500), rng.normal(size=500)).p_value)
    uniform = ks_one_sample(ps, lambda p: np.clip(p, 0, 1))
    assert uniform.p_value >= 1e-3


def test_kolmogorov_sf_values():
    assert kolmogorov_sf(0.1) == 1.0
    # reference value of the Kolmogorov distribution at 1.36 (5% point)
    assert kolmogorov_sf(1.3581) == pytest.approx(0.05, abs=2e-4)


def test_ks_one_sample_normal():
    x = np.random.default_rng(3).normal(size=4000)
    assert ks_one_sample(x, normal_cdf).passed
    assert not ks_one_sample(x + 0.5, normal_cdf).passed


def test_moment_compare_examples():
    rep = moment_compare(np.ones(10), np.ones(10))
    assert rep.details["deltas"] == [0.0, 0.0]
    rng = np.random.default_rng(1)
    x = rng.normal(size=10_000)
    shifted = moment_compare(x, x + 1, orders=(1,))
    assert not shifted.passed and shifted.statistic > 40


def test_inverse_gamma_variance_target():
    rng = np.random.default_rng(2)
    draws = 1.0 / rng.gamma(5.0, 1.0, size=200_000)
    assert moment_compare(draws, orders=(1, 2), target=[0.25, 1 / 48]).passed
    assert mean_against(draws, 0.25).passed


def test_moment_compare_needs_reference():
    with pytest.raises(DomainError):
        moment_compare([1.0, 2.0])


def test_subgaussian_fit_examples():
    u = np.linspace(0.5, 3, 8)
    k = 4.0
    rep = subgaussian_fit(u, np.exp(-u ** 2 / k), k)
    assert rep.statistic == pytest.approx(-1.0, abs=1e-12)
    assert rep.passed
    flat = subgaussian_fit(u, np.full(8, 0.3), k)
    assert flat.statistic == pytest.approx(0.0, abs=1e-12) and not flat.passed
    with pytest.raises(StatisticalError):
        subgaussian_fit(u, np.zeros(8), k)


def test_exact_law_distance_examples():
    law = np.array([0.25, 0.5, 0.25])
    rep = exact_law_distance(law * 400, law)
    assert rep.statistic == 0.0 and rep.passed
    one = exact_law_distance([1.0], [1.0])
    assert one.statistic == 0.0
    bad = exact_law_distance([3, 0, 1], [0.5, 0.5, 0.0])
    assert bad.p_value == 0.0 and not bad.passed


def test_report_serialization():
    rep = TestReport("x", np.float64(0.5), np.bool_(True), p_value=0.2,
                     details={"v": np.arange(2), "inf": math.inf})
    d = json.loads(rep.to_json())
    assert d["statistic"] == 0.5 and d["passed"] is True
    assert d["details"] == {"v": [0, 1], "inf": "inf"}
    with pytest.raises(StatisticalError):
        TestReport("y", 0.0, True, p_value=1.5)


def test_nan_rejected():
    with pytest.raises(StatisticalError):
        ks_statistic([1.0, float("nan")], [1.0])
