"""Discrete heat kernels for the simple random walk on the half-line.

Notation used throughout the package:

``p_n(x)``
    n-step mass of the simple symmetric walk at ``x`` (whole line).
``p_n^(a)(x, y)``
    mass of the walk reflected at 0 and killed with probability ``a`` on
    each visit to 0; ``a = 1/2`` is the walk killed on leaving the
    non-negative integers.
``psi(x, n)``
    survival mass ``sum_y p_n^(1/2)(x, y)``; equals ``#paths / 2**n`` for
    non-negative nearest-neighbour paths of length ``n`` from ``x``.
``cp(n, N, x, y)``
    transition mass of the walk conditioned to stay non-negative up to
    time ``N``: ``p_n^(1/2)(x, y) psi(y, N - n) / psi(x, N)``.

Kernel rows come from the convex recursion
``p_{n+1}(x) = (p_n(x-1) + p_n(x+1)) / 2`` started at a Dirac mass.  Only
the half row ``u >= 0`` is stored.
"""

from __future__ import annotations

import json
import math
import threading
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Any, Iterator

import numpy as np

from .errors import ConfigError, DomainError, RangeError

__all__ = [
    "KernelWorkspace",
    "BoundAuditReport",
    "AUDITS",
    "audit_bound",
    "whole_line_kernel",
    "alpha_boundary_kernel",
    "survival_mass",
    "conditioned_transition",
    "kernel_table_csv",
    "survival_table_csv",
]


def _step(row: np.ndarray) -> np.ndarray:
    nxt = np.empty_like(row)
    nxt[0] = row[1]
    nxt[1:-1] = 0.5 * (row[:-2] + row[2:])
    nxt[-1] = 0.5 * row[-2]
    return nxt


def _take(row: np.ndarray, idx) -> np.ndarray:
    """``row[idx]`` with zero for indices past the end."""
    idx = np.asarray(idx)
    inside = idx < row.shape[0]
    return np.where(inside, row[np.minimum(idx, row.shape[0] - 1)], 0.0)


def _psi_from_row(row: np.ndarray, xmax: int) -> np.ndarray:
    # head form: psi(x) - psi(x-1) = p(x) + p(x+1); one of the two is zero by
    # parity, so every increment is exact and the running sum is non-decreasing.
    pad = np.zeros(xmax + 3)
    k = min(row.shape[0], xmax + 3)
    pad[:k] = row[:k]
    head = np.minimum(np.cumsum(pad[:-2] + pad[1:-1]), 1.0)
    # tail form by reflection: psi(x) = 1 - P(S >= x+1) - P(S >= x+2), accurate near 1
    tail = np.concatenate([np.cumsum(row[::-1])[::-1], [0.0, 0.0]])
    idx = np.minimum(np.arange(xmax + 1), tail.shape[0] - 3)
    over = np.arange(xmax + 1) >= tail.shape[0] - 3
    comp = np.where(over, 1.0, 1.0 - tail[idx + 1] - tail[idx + 2])
    return np.where(head <= 0.5, head, comp)


class KernelWorkspace:
    """Memoized kernel rows and survival masses up to ``horizon_max``.

    Horizons up to ``dense_limit`` keep every row in memory.  Larger horizons
    keep a checkpoint row every ``checkpoint`` steps and rebuild other rows
    on demand (a small LRU cache holds recent ones).  All public accessors
    are read-only and safe to call from several threads.
    """

    def __init__(self, horizon_max: int, dense_limit: int = 2048, checkpoint: int = 256,
                 cache_rows: int = 64):
        if horizon_max < 0:
            raise DomainError("horizon_max must be non-negative")
        self.horizon_max = int(horizon_max)
        self.width = self.horizon_max + 3
        self.dense = self.horizon_max <= dense_limit
        self._lock = threading.Lock()
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_rows = cache_rows
        row = np.zeros(self.width)
        row[0] = 1.0
        if self.dense:
            table = np.empty((self.horizon_max + 1, self.width))
            table[0] = row
            for n in range(1, self.horizon_max + 1):
                row = _step(row)
                table[n] = row
            table.setflags(write=False)
            self._table = table
            psi = np.empty((self.horizon_max + 1, self.horizon_max + 2))
            for n in range(self.horizon_max + 1):
                psi[n] = _psi_from_row(table[n], self.horizon_max + 1)
            psi.setflags(write=False)
            self._psi = psi
        else:
            self._gap = int(checkpoint)
            self._checkpoints = {0: row.copy()}
            for n in range(1, self.horizon_max + 1):
                row = _step(row)
                if n % self._gap == 0:
                    self._checkpoints[n] = row.copy()

    # -- validation -------------------------------------------------------
    def _check_n(self, n: int) -> int:
        n = int(n)
        if n < 0 or n > self.horizon_max:
            raise RangeError(f"time {n} outside workspace horizon 0..{self.horizon_max}")
        return n

    @staticmethod
    def _check_site(*sites: int) -> None:
        for s in sites:
            if np.any(np.asarray(s) < 0):
                raise DomainError("sites must be non-negative")

    # -- rows -------------------------------------------------------------
    def row(self, n: int) -> np.ndarray:
        """Half row ``p_n(u)`` for ``u = 0..horizon_max+2`` (read-only)."""
        n = self._check_n(n)
        if self.dense:
            return self._table[n]
        with self._lock:
            hit = self._cache.get(n)
            if hit is not None:
                self._cache.move_to_end(n)
                return hit
        base = (n // self._gap) * self._gap
        row = self._checkpoints[base]
        for _ in range(n - base):
            row = _step(row)
        row = row.copy()
        row.setflags(write=False)
        with self._lock:
            self._cache[n] = row
            while len(self._cache) > self._cache_rows:
                self._cache.popitem(last=False)
        return row

    def rows(self, lo: int, hi: int) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(n, row)`` for ``n = lo..hi`` by one sequential sweep."""
        lo, hi = self._check_n(lo), self._check_n(hi)
        if self.dense:
            for n in range(lo, hi + 1):
                yield n, self._table[n]
            return
        row = self.row(lo)
        yield lo, row
        for n in range(lo + 1, hi + 1):
            row = _step(row)
            yield n, row

    def psi_row(self, n: int, xmax: int) -> np.ndarray:
        """``psi(x, n)`` for ``x = 0..xmax``."""
        n = self._check_n(n)
        if xmax < 0:
            raise DomainError("xmax must be non-negative")
        if self.dense and xmax <= self.horizon_max + 1:
            return self._psi[n, : xmax + 1]
        out = _psi_from_row(self.row(n), xmax)
        return out

    def psi_rows(self, lo: int, hi: int, xmax: int) -> np.ndarray:
        """Array of shape ``(hi-lo+1, xmax+1)`` with ``psi(x, n)``, ``n = lo..hi``."""
        if self.dense and xmax <= self.horizon_max + 1:
            lo, hi = self._check_n(lo), self._check_n(hi)
            return self._psi[lo : hi + 1, : xmax + 1]
        return np.array([_psi_from_row(r, xmax) for _, r in self.rows(lo, hi)])

    # -- scalar kernels ---------------------------------------------------
    def whole_line(self, n: int, x: int) -> float:
        r = self.row(n)
        x = abs(int(x))
        return float(r[x]) if x < r.shape[0] else 0.0

    def alpha_boundary(self, n: int, x: int, y: int, alpha: float) -> float:
        return float(self.alpha_boundary_row(n, x, alpha, y)[y])

    def alpha_boundary_row(self, n: int, x: int, alpha: float, ymax: int) -> np.ndarray:
        """``p_n^(alpha)(x, y)`` for ``y = 0..ymax`` via the image series.

        The series solves the heat equation off the wall and the boundary
        rule ``p_{n+1}(x, 0) = alpha p_n(x, 1)``.  Its time-0 value is the
        Dirac mass at ``x`` except when ``x = 0`` and ``alpha != 1/2``, where
        the reflected image adds ``(2 alpha - 1)`` at the origin and the
        series equals ``2 alpha`` times the walk started from a unit mass.
        """
        if not (0.0 <= alpha <= 1.0) or math.isnan(alpha):
            raise DomainError("alpha must lie in [0, 1]")
        self._check_site(x, ymax)
        r = self.row(n)
        y = np.arange(ymax + 1)
        direct = _take(r, np.abs(x - y))
        if alpha == 0.5:
            return direct - _take(r, x + y + 2)
        if alpha == 1.0:
            return direct + _take(r, x + y)
        if alpha == 0.0:
            return direct - _take(r, x + y)
        out = direct + (2 * alpha - 1) * _take(r, x + y)
        rho = 2 * alpha - 1
        coef = 4 * alpha * (1 - alpha)
        # terms with x + y + 2k > n vanish by support
        n = int(n)
        k = 1
        weight = 1.0
        while x + 2 * k <= n:
            out = out - coef * weight * _take(r, x + y + 2 * k)
            weight *= rho
            k += 1
        return out

    def half_kernel_matrix(self, n: int, xmax: int, ymax: int) -> np.ndarray:
        """``p_n^(1/2)(x, y)`` for ``x <= xmax``, ``y <= ymax``."""
        r = self.row(n)
        x = np.arange(xmax + 1)[:, None]
        y = np.arange(ymax + 1)[None, :]
        return _take(r, np.abs(x - y)) - _take(r, x + y + 2)

    def survival(self, x: int, n: int) -> float:
        self._check_site(x)
        return float(self.psi_row(n, int(x))[int(x)])

    def survival_closed_form(self, x: int, n: int) -> float:
        """``p_n(x+1) + p_n(0) + 2 sum_{1<=u<=x} p_n(u)``, summed directly."""
        r = self.row(n)
        x = int(x)
        return float(_take(r, x + 1) + r[0] + 2.0 * np.sum(_take(r, np.arange(1, x + 1))))

    def survival_cdf_form(self, x: int, n: int) -> float:
        """``F_n(x) + F_n(x+1) - 1`` with ``F_n`` the cdf of the n-step walk."""
        r = self.row(n)
        n = int(n)
        u = np.arange(-n, n + 1)
        pm = _take(r, np.abs(u))
        cdf = np.cumsum(pm)

        def F(v: int) -> float:
            if v < -n:
                return 0.0
            if v >= n:
                return 1.0
            return float(cdf[v + n])

        return F(int(x)) + F(int(x) + 1) - 1.0

    def conditioned(self, n: int, N: int, x: int, y: int) -> float:
        self._check_site(x, y)
        return float(self.conditioned_row(n, N, x, int(y))[int(y)])

    def conditioned_row(self, n: int, N: int, x: int, ymax: int | None = None) -> np.ndarray:
        """``cp(n, N, x, y)`` for ``y = 0..ymax`` (default ``x + n``)."""
        if n > N:
            raise DomainError("elapsed time exceeds horizon")
        self._check_n(N)
        self._check_n(n)
        self._check_site(x)
        ymax = x + n if ymax is None else int(ymax)
        r = self.row(n)
        y = np.arange(ymax + 1)
        half = _take(r, np.abs(x - y)) - _take(r, x + y + 2)
        tail = self.psi_row(N - n, ymax)
        denom = self.psi_row(N, x)[x]
        if denom <= 0.0:
            raise ArithmeticError("survival mass underflowed to zero")
        return half * tail / denom

    def conditioned_matrix(self, n: int, N: int, xmax: int, ymax: int) -> np.ndarray:
        if n > N:
            raise DomainError("elapsed time exceeds horizon")
        half = self.half_kernel_matrix(n, xmax, ymax)
        tail = self.psi_row(N - n, ymax)
        head = self.psi_row(N, xmax)
        return half * tail[None, :] / head[:, None]

    def up_probability(self, x: int, M: int) -> float:
        """One-step up probability ``cp(1, M, x, x+1)`` for ``M >= 1``."""
        if M < 1:
            raise DomainError("no step left")
        if x == 0:
            return 1.0
        return float(self.up_table(M, 0, 1, x + 1)[0, x])

    def up_table(self, n: int, t0: int, L: int, width: int) -> np.ndarray:
        """Up probabilities ``Q[t - t0, s] = cp(1, n - t, s, s + 1)``.

        Rows ``t = t0..t0+L-1``, sites ``s = 0..width-1``.  ``Q[:, 0]`` is
        exactly 1 (the step from 0 is forced).
        """
        if t0 < 0 or L < 1 or t0 + L > n:
            raise DomainError("time block must lie inside 0..n-1")
        m_hi = n - t0
        m_lo = n - t0 - L
        psi = self.psi_rows(m_lo, m_hi, width)  # row j <-> psi(., m_lo + j)
        Q = np.empty((L, width))
        for i in range(L):
            M = m_hi - i
            num = psi[M - 1 - m_lo, 1 : width + 1]
            den = psi[M - m_lo, :width]
            Q[i] = 0.5 * num / den
        Q[:, 0] = 1.0
        return Q

    def martingale(self, x: int, i: int, n: int) -> float:
        """``-1 + (x + 1) / psi(x, n - i)``."""
        if i > n or i < 0:
            raise DomainError("need 0 <= i <= n")
        return -1.0 + (x + 1) / self.survival(x, n - i)


# -- module-level conveniences --------------------------------------------

_shared: dict[int, KernelWorkspace] = {}
_shared_lock = threading.Lock()


def _workspace(n: int) -> KernelWorkspace:
    size = max(64, 1 << max(0, int(n) - 1).bit_length())
    with _shared_lock:
        ws = _shared.get(size)
        if ws is None:
            ws = KernelWorkspace(size)
            _shared[size] = ws
    return ws


def whole_line_kernel(n: int, x: int, ws: KernelWorkspace | None = None) -> float:
    return (ws or _workspace(n)).whole_line(n, x)


def alpha_boundary_kernel(n: int, x: int, y: int, alpha: float,
                          ws: KernelWorkspace | None = None) -> float:
    return (ws or _workspace(n)).alpha_boundary(n, x, y, alpha)


def survival_mass(x: int, n: int, ws: KernelWorkspace | None = None) -> float:
    return (ws or _workspace(max(n, x))).survival(x, n)


def conditioned_transition(n: int, N: int, x: int, y: int,
                           ws: KernelWorkspace | None = None) -> float:
    if n > N:
        raise DomainError("elapsed time exceeds horizon")
    return (ws or _workspace(max(N, x + n))).conditioned(n, N, x, y)


def kernel_table_csv(ws: KernelWorkspace, n_max: int | None = None) -> str:
    n_max = ws.horizon_max if n_max is None else n_max
    lines = ["n,x,value"]
    for n in range(n_max + 1):
        r = ws.row(n)
        for x in range(-n, n + 1):
            lines.append(f"{n},{x},{float(r[abs(x)])!r}")
    return "\n".join(lines) + "\n"


def survival_table_csv(ws: KernelWorkspace, n_max: int | None = None,
                       x_max: int | None = None) -> str:
    n_max = ws.horizon_max if n_max is None else n_max
    x_max = n_max if x_max is None else x_max
    lines = ["x,n,psi"]
    for n in range(n_max + 1):
        psi = ws.psi_row(n, x_max)
        for x in range(x_max + 1):
            lines.append(f"{x},{n},{float(psi[x])!r}")
    return "\n".join(lines) + "\n"


# -- bound audits -----------------------------------------------------------

@dataclass
class BoundAuditReport:
    """Worst ratio of left side to constant-free right side over a grid."""

    bound_name: str
    grid_spec: dict[str, Any]
    worst_ratio: float
    argmax: dict[str, Any] = field(default_factory=dict)
    runtime_ms: float = 0.0

    @property
    def implied_constant(self) -> float:
        return self.worst_ratio

    def record(self) -> dict[str, Any]:
        return {"bound": self.bound_name, "grid": self.grid_spec,
                "worst_ratio": self.worst_ratio, "runtime_ms": self.runtime_ms}

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)


class _Worst:
    def __init__(self) -> None:
        self.value = -math.inf
        self.where: dict[str, Any] = {}

    def update(self, ratios: np.ndarray, **where: Any) -> None:
        ratios = np.asarray(ratios, dtype=float)
        if ratios.size == 0:
            return
        flat = int(np.nanargmax(ratios)) if np.any(np.isfinite(ratios)) else 0
        v = float(ratios.flat[flat])
        if v > self.value:
            self.value = v
            idx = np.unravel_index(flat, ratios.shape) if ratios.ndim else ()
            self.where = {**where, "index": [int(i) for i in idx]}


def _grid(spec: dict[str, Any], key: str, default):
    return spec.get(key, default)


def _nN_pairs(spec):
    N_max = int(_grid(spec, "N_max", 64))
    step = int(_grid(spec, "step", 1))
    for N in range(0, N_max + 1, step):
        for n in range(0, N + 1, step):
            yield n, N


def _audit_mass_upper(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 64))
    N_max = int(_grid(spec, "N_max", 64))
    x = np.arange(x_max + 1)
    for N in range(0, N_max + 1):
        psi = ws.psi_row(N, x_max)
        env = np.minimum(1.0, (x + 1) / math.sqrt(N)) if N > 0 else np.ones_like(psi)
        worst.update(psi / env, N=N)


def _audit_mass_lower(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 64))
    N_max = int(_grid(spec, "N_max", 64))
    x = np.arange(x_max + 1)
    for N in range(1, N_max + 1):
        psi = ws.psi_row(N, x_max)
        # (x+1)/(x+1+C sqrt N) <= psi  <=>  C >= (x+1)(1/psi - 1)/sqrt N
        worst.update((x + 1) * (1.0 / psi - 1.0) / math.sqrt(N), N=N)


def _exp_moment(ws, n, N, x_max, a):
    K = ws.conditioned_matrix(n, N, x_max, x_max + n)
    y = np.arange(K.shape[1])
    x = np.arange(x_max + 1)
    # sum_y cp(x, y) e^{a (y - x)}
    return K @ np.exp(a * y) * np.exp(-a * x), K


def _audit_macky(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 32))
    Kc = float(_grid(spec, "K", 9.0))
    for a in _grid(spec, "a_values", [0.0, 0.1, 0.5, 1.0]):
        for n, N in _nN_pairs(spec):
            m, _ = _exp_moment(ws, n, N, x_max, a)
            worst.update(m / math.exp(Kc * a * a * n), n=n, N=N, a=a)


def _audit_fetiz(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 32))
    Kc = float(_grid(spec, "K", 9.0))
    for p in _grid(spec, "p_values", [1.0, 2.0, 3.0]):
        for a in _grid(spec, "a_values", [0.0, 0.5]):
            for n, N in _nN_pairs(spec):
                K = ws.conditioned_matrix(n, N, x_max, x_max + n)
                y = np.arange(K.shape[1])
                x = np.arange(x_max + 1)
                lhs = (K ** p) @ np.exp(a * y) * np.exp(-a * x)
                rhs = (n + 1) ** (-(p - 1) / 2) * math.exp(Kc * a * a * n)
                worst.update(lhs / rhs, n=n, N=N, a=a, p=p)


def _audit_wconc(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 32))
    b = float(_grid(spec, "b", 1.0))
    for n, N in _nN_pairs(spec):
        K = ws.conditioned_matrix(n, N, x_max, x_max + n)
        x = np.arange(x_max + 1)[:, None]
        y = np.arange(K.shape[1])[None, :]
        rhs = np.exp(-b * np.abs(x - y) / math.sqrt(max(n, 1))) / math.sqrt(n + 1)
        worst.update(K / rhs, n=n, N=N)


def _same_parity_pairs(m: int):
    a = np.arange(m + 1)
    d = a[:, None] - a[None, :]
    return (d != 0) & (d % 2 == 0)


def _audit_dack(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 24))
    for n, N in _nN_pairs(spec):
        K = ws.conditioned_matrix(n, N, x_max, x_max + n)
        ym = K.shape[1] - 1
        mask = _same_parity_pairs(ym)
        dy = np.abs(np.arange(ym + 1)[:, None] - np.arange(ym + 1)[None, :])
        scale = math.sqrt((N + 1) / (N - n + 1)) / (n + 1)
        for x in range(x_max + 1):
            diff = np.abs(K[x][:, None] - K[x][None, :])
            ratio = np.where(mask, diff / np.maximum(dy, 1) / scale, 0.0)
            worst.update(ratio, n=n, N=N, x=x)


def _audit_spat(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 16))
    Kc = float(_grid(spec, "K", 9.0))
    for p in _grid(spec, "p_values", [1.0, 2.0]):
        for a in _grid(spec, "a_values", [0.0, 0.25]):
            for n, N in _nN_pairs(spec):
                if n == 0:
                    continue
                K = ws.conditioned_matrix(n, N, x_max, x_max + n)
                z = np.arange(K.shape[1])
                w = np.exp(a * z)
                x = np.arange(x_max + 1)
                diff = (K[:, None, :] - K[None, :, :]) ** (2 * p)
                lhs = diff @ w
                dx = np.abs(x[:, None] - x[None, :])
                rhs = (np.exp(a * (x[:, None] + x[None, :]) + Kc * a * a * n)
                       * (n ** (0.5 - 1.5 * p) + a ** p * n ** (0.5 - p)) * dx ** p)
                mask = _same_parity_pairs(x_max)
                worst.update(np.where(mask, lhs / np.where(mask, rhs, 1.0), 0.0), n=n, N=N, a=a, p=p)


def _audit_tem(ws, spec, worst):
    # compares cp(m, N-n+m, x, .) with cp(n, N, x, .): both leave N-n steps
    x_max = int(_grid(spec, "x_max", 16))
    Kc = float(_grid(spec, "K", 9.0))
    N_max = int(_grid(spec, "N_max", 48))
    step = int(_grid(spec, "step", 2))
    for p in _grid(spec, "p_values", [1.0, 2.0]):
        for a in _grid(spec, "a_values", [0.0, 0.25]):
            for N in range(0, N_max + 1, step):
                for n in range(1, N + 1):
                    for m in range(max(1, n % 2), n, 2):  # n - m even
                        A = ws.conditioned_matrix(m, N - n + m, x_max, x_max + n)
                        B = ws.conditioned_matrix(n, N, x_max, x_max + n)
                        z = np.arange(A.shape[1])
                        x = np.arange(x_max + 1)
                        lhs = ((A - B) ** (2 * p)) @ np.exp(a * z)
                        rhs = (np.exp(2 * a * x + Kc * a * a * n)
                               * (m ** (0.5 - 1.5 * p) + a ** p * m ** (0.5 - p))
                               * (n - m) ** (p / 2))
                        worst.update(lhs / rhs, n=n, m=m, N=N, a=a, p=p)


def _audit_pointwise_spatial(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 24))
    mask = _same_parity_pairs(x_max)
    x = np.arange(x_max + 1)
    dx = np.sqrt(np.abs(x[:, None] - x[None, :]))
    for n, N in _nN_pairs(spec):
        K = ws.conditioned_matrix(n, N, x_max, x_max + n)
        diff = np.abs(K[:, None, :] - K[None, :, :]).max(axis=2)
        rhs = (n + 1) ** -0.75 * np.where(mask, dx, 1.0)
        worst.update(np.where(mask, diff / rhs, 0.0), n=n, N=N)


def _audit_pointwise_temporal(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 24))
    N_max = int(_grid(spec, "N_max", 48))
    for N in range(0, N_max + 1):
        for n in range(0, N + 1):
            for m in range(n % 2, n, 2):
                A = ws.conditioned_matrix(m, N - n + m, x_max, x_max + n)
                B = ws.conditioned_matrix(n, N, x_max, x_max + n)
                diff = np.abs(A - B).max(axis=1)
                worst.update(diff / ((m + 1) ** -0.75 * (n - m) ** 0.25), n=n, m=m, N=N)


def _audit_ohgod_value(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 64))
    n_max = int(_grid(spec, "n_max", 64))
    b = float(_grid(spec, "b", 1.0))
    x = np.arange(x_max + 1)[:, None]
    for n in range(n_max + 1):
        P = ws.half_kernel_matrix(n, x_max, x_max + n)
        y = np.arange(P.shape[1])[None, :]
        pref = np.minimum(1.0 / math.sqrt(n + 1), (x + 1) / (n + 1))
        rhs = pref * np.exp(-b * np.abs(x - y) / math.sqrt(max(n, 1)))
        worst.update(P / rhs, n=n)


def _audit_ohgod_diff(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 24))
    n_max = int(_grid(spec, "n_max", 48))
    b = float(_grid(spec, "b", 1.0))
    for n in range(n_max + 1):
        P = ws.half_kernel_matrix(n, x_max, x_max + n)
        ym = P.shape[1] - 1
        yy = np.arange(ym + 1)
        mask = _same_parity_pairs(ym)
        dyz = np.abs(yy[:, None] - yy[None, :])
        for x in range(x_max + 1):
            diff = np.abs(P[x][:, None] - P[x][None, :])
            near = np.minimum(np.abs(x - yy)[:, None], np.abs(x - yy)[None, :])
            pref = min(1.0 / (n + 1), (x + 1) / (n + 1) ** 1.5)
            rhs = pref * np.maximum(dyz, 1) * np.exp(-b * near / math.sqrt(max(n, 1)))
            worst.update(np.where(mask, diff / rhs, 0.0), n=n, x=x)


def _audit_sqrtgr(ws, spec, worst):
    x_max = int(_grid(spec, "x_max", 64))
    n_max = int(_grid(spec, "n_max", 64))
    for n in range(1, n_max + 1):
        for k in range(1, n + 1):
            K = ws.conditioned_matrix(k, n, x_max, x_max + k)
            mean = K @ np.arange(K.shape[1])
            worst.update((mean - np.arange(x_max + 1)) / math.sqrt(k), n=n, k=k)


def _audit_concentration(ws, spec, worst):
    # exact tail P(sup_{i<=k} |S_i - x| > u) against exp(-u^2 / (32 k))
    from .meander_walks import exact_sup_tail

    c = float(_grid(spec, "c", 1.0 / 32.0))
    for n in _grid(spec, "n_values", [16, 32, 64]):
        for x in _grid(spec, "x_values", [0, 3, 10]):
            for k in range(1, n + 1, int(_grid(spec, "k_step", 4))):
                u = np.arange(0, k + 1, dtype=float)
                tail = exact_sup_tail(ws, x, n, k, u)
                worst.update(tail / np.exp(-c * u * u / k), n=n, x=x, k=k)


# Audited inequalities, keyed by the names accepted on the command line:
#   mass / mass_lower    psi(x, N) against min(1, (x+1)/sqrt N) and (x+1)/(x+1+C sqrt N)
#   macky                exponential moment sum_y cp(x, y) e^{a(y-x)} <= C e^{K a^2 n}
#   fetiz                sum_y cp(x, y)^p e^{a(y-x)} <= C n^{-(p-1)/2} e^{K a^2 n}
#   wconc                pointwise Gaussian-type decay of cp(x, y) in |x - y| / sqrt n
#   dack                 Lipschitz continuity of cp(x, .) in the endpoint
#   spat / tem           weighted L^{2p} differences in the start point and in time
#   pointwise_*          sup-norm versions of the spatial and temporal differences
#   ohgod / ohgod_diff   the half-line kernel and its endpoint differences near the wall
#   sqrtgr               drift E[S_k] - x <= C sqrt k
#   concentration        exact sup-deviation tail against exp(-c u^2 / k), c = 1/32
AUDITS = {
    "mass": _audit_mass_upper,
    "mass_lower": _audit_mass_lower,
    "macky": _audit_macky,
    "wconc": _audit_wconc,
    "fetiz": _audit_fetiz,
    "dack": _audit_dack,
    "spat": _audit_spat,
    "tem": _audit_tem,
    "pointwise_spatial": _audit_pointwise_spatial,
    "pointwise_temporal": _audit_pointwise_temporal,
    "ohgod": _audit_ohgod_value,
    "ohgod_diff": _audit_ohgod_diff,
    "sqrtgr": _audit_sqrtgr,
    "concentration": _audit_concentration,
}


def _needed_horizon(name: str, spec: dict[str, Any]) -> int:
    x = int(spec.get("x_max", 64))
    n = max(int(spec.get("N_max", 64)), int(spec.get("n_max", 64)),
            max(spec.get("n_values", [64])))
    return 2 * (x + n) + 4


def audit_bound(bound_name: str, grid_spec: dict[str, Any] | None = None,
                ws: KernelWorkspace | None = None) -> BoundAuditReport:
    """Scan ``grid_spec`` for the audited inequality and report the implied constant.

    Difference bounds (``dack``, ``spat``, ``tem``, the pointwise difference bounds and
    ``ohgod_diff``) compare sites of equal parity only: across parity classes
    one of the two kernels vanishes identically and no bound of the stated
    form can hold uniformly.
    """
    if bound_name not in AUDITS:
        raise ConfigError(f"unknown bound {bound_name!r}; choose from {sorted(AUDITS)}")
    spec = dict(grid_spec or {})
    ws = ws or KernelWorkspace(_needed_horizon(bound_name, spec))
    start = time.perf_counter()
    worst = _Worst()
    AUDITS[bound_name](ws, spec, worst)
    if not math.isfinite(worst.value):
        raise ArithmeticError(f"audit {bound_name} produced no finite ratio")
    return BoundAuditReport(bound_name, spec, worst.value, worst.where,
                            round((time.perf_counter() - start) * 1e3, 3))
