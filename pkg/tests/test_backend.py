"""The compiled core and the numpy fallback must agree exactly."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfspace import _core_py
from halfspace.backend import available, load
from halfspace.discrete_kernels import KernelWorkspace

pytestmark = pytest.mark.skipif("cython" not in available(), reason="compiled core not built")

WS = KernelWorkspace(64)


def _cy():
    return load("cython")


def test_backend_names():
    assert _cy().NAME == "cython"
    assert load("python").NAME == "python"
    with pytest.raises(ValueError):
        load("fortran")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.integers(1, 40), st.integers(0, 2**32))
def test_advance_walkers_equal(x, L, seed):
    rng = np.random.default_rng(seed)
    W = x + L + 2
    Q = np.ascontiguousarray(WS.up_table(L, 0, L, W))
    U = rng.random((16, L))
    outs = []
    for mod in (_core_py, _cy()):
        pos = np.full(16, x, dtype=np.int64)
        out = np.empty((16, L), dtype=np.int64)
        mod.advance_walkers(pos, U, Q, out)
        outs.append(out)
    assert np.array_equal(*outs)
    assert outs[0].min() >= 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.integers(1, 40), st.integers(0, 2**32))
def test_advance_coupled_equal(x, L, seed):
    rng = np.random.default_rng(seed)
    W = x + L + 3
    Q = np.ascontiguousarray(WS.up_table(L, 0, L, W))
    U = rng.random((16, L))
    res = []
    for mod in (_core_py, _cy()):
        lo = np.full(16, x, dtype=np.int64)
        hi = np.full(16, x + 1, dtype=np.int64)
        a = np.empty((16, L), dtype=np.int64)
        b = np.empty((16, L), dtype=np.int64)
        mod.advance_coupled(lo, hi, U, Q, a, b)
        res.append((a, b))
    assert np.array_equal(res[0][0], res[1][0]) and np.array_equal(res[0][1], res[1][1])
    assert np.all(np.abs(res[0][1] - res[0][0]) == 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(1, 20), st.integers(0, 2**32), st.booleans())
def test_fk_routines_close(x, L, seed, stop):
    rng = np.random.default_rng(seed)
    R, W = 3, x + L + 2
    Q = np.ascontiguousarray(WS.up_table(L, 0, L, W))
    factor = np.ascontiguousarray(1.0 + 0.3 * rng.normal(size=(R, L, W)))
    term = np.ascontiguousarray(rng.random((R, W)))
    absorb = np.ascontiguousarray(rng.random((R, W)))
    line = L if stop else None
    a = _core_py.fk_backward(term, factor, Q, absorb, line)
    b = _cy().fk_backward(term, factor, Q, absorb, line)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)
    f1 = _core_py.fk_forward(x, factor, Q, term)
    f2 = _cy().fk_forward(x, factor, Q, term)
    assert np.allclose(f1, f2, rtol=1e-13, atol=1e-15)
    if not stop:
        assert np.allclose(a[:, x], f1, rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**32))
def test_octant_table_equal(P, Qn, seed):
    P = max(P, Qn)
    z = np.ascontiguousarray(np.random.default_rng(seed).random((2, P + 1, Qn + 1)) + 0.1)
    assert np.allclose(_core_py.octant_table(z), _cy().octant_table(z), rtol=1e-14)


def test_width_guard():
    Q = np.ascontiguousarray(WS.up_table(4, 0, 4, 3))
    U = np.zeros((1, 4))
    for mod in (_core_py, _cy()):
        pos = np.array([2], dtype=np.int64)
        with pytest.raises(IndexError):
            mod.advance_walkers(pos, U, Q, np.empty((1, 4), dtype=np.int64))
