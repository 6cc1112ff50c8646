"""Pure numpy implementations of the hot loops.

The compiled module ``halfspace._core`` exposes the same functions with the
same arguments; both consume pre-drawn uniforms so they produce identical
output.  ``halfspace.backend`` picks one at import time.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def _check_width(pos: np.ndarray, width: int) -> None:
    if pos.size and (pos.min() < 0 or pos.max() >= width):
        raise IndexError("walker left the up-probability table")


def advance_walkers(pos, U, Q, out):
    """Move walkers through ``L`` steps.

    Walker ``r`` at site ``s`` before step ``t`` goes up iff ``U[r, t] <= Q[t, s]``.
    ``pos`` is updated in place; ``out[r, t]`` receives the site after step ``t``.
    """
    R, L = U.shape
    W = Q.shape[1]
    for t in range(L):
        _check_width(pos, W)
        up = U[:, t] <= Q[t, pos]
        pos += np.where(up, 1, -1)
        out[:, t] = pos
    return out


def advance_coupled(lo, hi, U, Q, out_lo, out_hi):
    """Coupled step of two walkers at distance one, sharing one uniform per step.

    Three cases per step, with ``q`` the up-probability at the walker's site:
    the uniform is compared against the smaller threshold first (both go up),
    then against the larger (the lower-threshold walker goes down, the other
    up), and otherwise both go down.  Ties go to the up-step.
    """
    R, L = U.shape
    W = Q.shape[1]
    for t in range(L):
        _check_width(lo, W)
        _check_width(hi, W)
        u = U[:, t]
        q_lo = Q[t, lo]
        q_hi = Q[t, hi]
        small = np.minimum(q_lo, q_hi)
        large = np.maximum(q_lo, q_hi)
        both_up = u <= small
        split = (~both_up) & (u <= large)
        # in the split case the walker owning the larger threshold goes up
        lo_up = both_up | (split & (q_lo >= q_hi))
        hi_up = both_up | (split & (q_hi > q_lo))
        lo += np.where(lo_up, 1, -1)
        hi += np.where(hi_up, 1, -1)
        out_lo[:, t] = lo
        out_hi[:, t] = hi
    return out_lo, out_hi


def fk_backward(terminal, factor, Q, absorb, stop_line):
    """Backward Feynman-Kac recursion for the conditioned walk.

    ``terminal[r, s]`` is the value at the final time ``L``; for ``t < L``::

        V_t(s) = factor[r, t, s] * absorb[r, s]                 if t + s >= stop_line
        V_t(s) = factor[r, t, s] * (Q[t, s] V_{t+1}(s+1)
                                   + (1 - Q[t, s]) V_{t+1}(s-1))  otherwise

    Returns ``V_0`` for every start site.  The last column is treated as
    unreachable and kept at zero.
    """
    R, L, W = factor.shape
    V = np.array(terminal, dtype=np.float64, copy=True)
    nxt = np.empty_like(V)
    s_idx = np.arange(W)
    for t in range(L - 1, -1, -1):
        q = Q[t]
        nxt[:, :] = 0.0
        nxt[:, : W - 1] = q[: W - 1] * V[:, 1:]
        nxt[:, 1 : W - 1] += (1.0 - q[1 : W - 1]) * V[:, : W - 2]
        if stop_line is not None and stop_line >= 0:
            stopped = (t + s_idx) >= stop_line
            if stopped.any():
                nxt[:, stopped] = absorb[:, stopped]
        nxt *= factor[:, t, :]
        nxt[:, W - 1] = 0.0
        V, nxt = nxt, V
    return V


def fk_forward(start, factor, Q, terminal):
    """Forward recursion ``U_{t+1}(s') = sum_s U_t(s) factor[t, s] p_1(s, s')``.

    Returns ``sum_s U_L(s) terminal[r, s]`` for every replicate.
    """
    R, L, W = factor.shape
    U = np.zeros((R, W))
    U[:, start] = 1.0
    for t in range(L):
        m = U * factor[:, t, :]
        q = Q[t]
        nxt = np.zeros_like(U)
        nxt[:, 1:] += m[:, : W - 1] * q[: W - 1]
        nxt[:, : W - 1] += m[:, 1:] * (1.0 - q[1:])
        U = nxt
    return np.einsum("rs,rs->r", U, terminal)


def octant_table(zeta):
    """Partition functions Z(i, j) = zeta(i, j) (Z(i-1, j) + Z(i, j-1)) on i >= j >= 0.

    ``zeta`` has shape ``(R, P+1, Q+1)``; entries with ``j > i`` are ignored.
    """
    R, P1, Q1 = zeta.shape
    Z = np.zeros_like(zeta, dtype=np.float64)
    Z[:, 0, 0] = zeta[:, 0, 0]
    for i in range(1, P1):
        for j in range(0, min(i, Q1 - 1) + 1):
            acc = Z[:, i - 1, j].copy()
            if j > 0:
                acc += Z[:, i, j - 1]
            Z[:, i, j] = zeta[:, i, j] * acc
    return Z
