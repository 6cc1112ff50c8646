"""Stochastic heat equation on the half-line by truncated Picard (chaos) iteration.

Two solution routes share a discretized space-time white noise:

* ``normalized``: kernels ``M_{T-S}^T(X, Y)`` of Brownian motion conditioned
  to stay positive up to the terminal time, evaluated pointwise at cell
  midpoints (midpoint rule); the wall column uses the ``X = 0`` limit.
* ``dirichlet``: killed kernels ``P^Dir``, integrated exactly over each cell.

Their solutions satisfy ``Z(T, X) h(T, X) = Z_Dir(T, X)`` up to quadrature
error, with ``h(T, X) = 2 Phi(X / sqrt T) - 1``.

Discretization: time cells ``[S_i, S_i + dt)``, ``S_i = i dt``; space cells
``[m dx, (m+1) dx)`` with midpoints ``Y_m``, truncated at ``X_max``.  The
noise on a cell is ``xi / sqrt(dt dx)`` with ``xi`` standard normal.  The
stochastic integral is evaluated at the left time endpoint (Ito)::

    u_{k+1}(T_j, X) = sum_{i<j} sum_m K_{T_j - S_i}(X, Y_m) u_k(S_i, Y_m) xi_{i,m} gamma sqrt(dt/dx)

where ``K`` is the cell-weighted kernel of the route and ``gamma`` the noise
strength.  Because ``xi_{i,m}`` is independent of ``u_k`` at times ``<= S_i``
the second moments obey an exact deterministic recursion
(:func:`second_moment_series`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .continuum_kernels import (SQRT_2_OVER_PI, dirichlet_cell_mass, dirichlet_kernel,
                                heat_kernel, integrate, normal_cdf, survival_probability)
from .errors import ConfigError, DomainError
from .rng import RngStream, map_blocks
from .stattests import TestReport, ks_one_sample

__all__ = [
    "GridParams",
    "InitialData",
    "ChaosGrid",
    "K_MAX",
    "kernel_tables",
    "solve_batch",
    "picard_solve",
    "evaluate_final",
    "second_moment_series",
    "truncation_decay",
    "mean_check",
    "noise_self_test",
    "coarsen_noise",
    "relation_mismatch",
    "dirichlet_relation_check",
    "derivative_limit_experiment",
    "wall_derivative_quadrature",
    "polymer_to_she_convergence",
    "field_csv",
]

K_MAX = 16


@dataclass(frozen=True)
class GridParams:
    dt: float
    dx: float
    T_max: float = 1.0
    X_max: float = 4.0
    K: int = 8
    noise_strength: float = 1.0

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.dx <= 0 or self.T_max <= 0 or self.X_max <= 0:
            raise ConfigError("grid steps and extents must be positive")
        if not 0 <= self.K <= K_MAX:
            raise ConfigError(f"truncation order {self.K} outside 0..{K_MAX}")
        if abs(self.T_max / self.dt - round(self.T_max / self.dt)) > 1e-9:
            raise ConfigError("T_max must be a multiple of dt")
        if abs(self.X_max / self.dx - round(self.X_max / self.dx)) > 1e-9:
            raise ConfigError("X_max must be a multiple of dx")

    @property
    def N(self) -> int:
        return int(round(self.T_max / self.dt))

    @property
    def M(self) -> int:
        return int(round(self.X_max / self.dx))

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.dx

    @property
    def x_out(self) -> np.ndarray:
        """Output columns: the wall ``X = 0`` followed by the cell midpoints."""
        return np.concatenate([[0.0], self.midpoints])

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt

    def refined(self) -> "GridParams":
        return GridParams(self.dt / 2, self.dx / 2, self.T_max, self.X_max, self.K, self.noise_strength)


@dataclass
class InitialData:
    """Initial data at the cell midpoints ``points`` (and its value at the wall)."""

    kind: str
    values: np.ndarray
    points: np.ndarray
    wall: float = 1.0
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("function", "gbm"):
            raise ConfigError(f"unknown initial data kind {self.kind!r}")
        if np.any(np.asarray(self.values) <= 0):
            raise DomainError("initial data must be positive")

    @classmethod
    def function(cls, f: Callable[[np.ndarray], np.ndarray], grid: GridParams) -> "InitialData":
        y = grid.midpoints
        vals = np.broadcast_to(np.asarray(f(y), dtype=float), (grid.M,)).copy()
        return cls("function", vals, y, float(np.asarray(f(np.array([0.0])), dtype=float).ravel()[0]))

    @classmethod
    def constant(cls, grid: GridParams, value: float = 1.0) -> "InitialData":
        return cls.function(lambda y: np.full_like(y, value), grid)

    @classmethod
    def gbm(cls, grid: GridParams, rng: RngStream, mu: float = 0.0, sigma: float = 1.0) -> "InitialData":
        """``exp(sigma B_X + (mu - sigma^2/2) X)`` realised at the midpoints."""
        return cls("gbm", gbm_values(grid, rng.normal(grid.M), mu, sigma), grid.midpoints, 1.0, mu, sigma)

    def covariance(self) -> np.ndarray:
        """``E[f(Y_m) f(Y_m')]``: exact for the GBM kind, the outer product otherwise."""
        if self.kind == "function":
            return np.outer(self.values, self.values)
        return gbm_covariance(self.points, self.mu, self.sigma)


def gbm_values(grid: GridParams, normals: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    y = grid.midpoints
    inc = np.diff(np.concatenate([[0.0], y]))
    B = np.cumsum(np.sqrt(inc) * normals, axis=-1)
    return np.exp(sigma * B + (mu - 0.5 * sigma * sigma) * y)


def gbm_covariance(y: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    """``E[f(Y) f(Y')] = exp(mu (Y + Y') + sigma^2 min(Y, Y'))`` for ``f = exp(sigma B + (mu - sigma^2/2) Y)``."""
    y = np.asarray(y, dtype=float)
    return np.exp(mu * (y[:, None] + y[None, :]) + sigma * sigma * np.minimum(y[:, None], y[None, :]))


# -- kernels -------------------------------------------------------------------

@dataclass
class _Tables:
    G: np.ndarray        # (N+1, M+1, M): lag-l cell weights, row 0 of axis 1 is the wall
    hT: np.ndarray       # (N+1, M+1): output normalisation at (T_j, X)
    hS: np.ndarray       # (N+1, M): h(S_i, Y_m) weighting of the integrand
    route: str


def _route_tables(grid: GridParams, route: str, x_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lag tables ``G[l, X, m]`` for ``l = 1..N`` and ``hT[j, X]`` at arbitrary output points."""
    N, dx, dt = grid.N, grid.dx, grid.dt
    y = grid.midpoints
    G = np.zeros((N + 1, x_out.size, grid.M))
    hT = np.ones((N + 1, x_out.size))
    X = x_out[:, None]
    for l in range(1, N + 1):
        t = l * dt
        if route == "dirichlet":
            G[l] = dirichlet_cell_mass(t, X, y - dx / 2, y + dx / 2)
        else:
            G[l] = dirichlet_kernel(t, X, y[None, :]) * dx
            wall = x_out == 0
            if wall.any():
                # d/dX P^Dir_t(X, Y) at X = 0
                G[l, wall] = 2.0 * y / t * heat_kernel(t, y) * dx
    if route == "normalized":
        for j in range(1, N + 1):
            T = j * dt
            hT[j] = np.where(x_out == 0, SQRT_2_OVER_PI / math.sqrt(T), survival_probability(T, x_out))
    return G, hT


def kernel_tables(grid: GridParams, route: str) -> _Tables:
    if route not in ("normalized", "dirichlet"):
        raise ConfigError(f"unknown route {route!r}")
    G, hT = _route_tables(grid, route, grid.x_out)
    hS = np.ones((grid.N + 1, grid.M))
    if route == "normalized":
        for i in range(1, grid.N + 1):
            hS[i] = survival_probability(i * grid.dt, grid.midpoints)
    return _Tables(G, hT, hS, route)


# -- solver --------------------------------------------------------------------

def _lag_sum(tab: _Tables, src: np.ndarray, N: int) -> np.ndarray:
    """``acc[:, j] = sum_{i<j} G[j-i] @ src[:, i]`` for ``j = 0..N``."""
    R = src.shape[0]
    acc = np.zeros((R, N + 1, tab.G.shape[1]))
    for l in range(1, N + 1):
        acc[:, l:, :] += src[:, : N + 1 - l, :] @ tab.G[l].T
    return acc


def solve_batch(grid: GridParams, f_vals: np.ndarray, wall: float | np.ndarray, xi: np.ndarray,
                route: str = "normalized", tables: _Tables | None = None) -> np.ndarray:
    """Chaos iterates ``u_0..u_K`` for a batch; returns ``(R, K+1, N+1, M+1)``.

    ``f_vals`` is ``(R, M)`` or ``(M,)``; ``xi`` is ``(R, N, M)`` standard normals.
    Column 0 is the wall.  Row 0 holds the initial data (0 at the wall for the
    Dirichlet route).
    """
    tab = tables or kernel_tables(grid, route)
    N, M, K = grid.N, grid.M, grid.K
    xi = np.asarray(xi, dtype=float)
    R = xi.shape[0]
    if xi.shape[1:] != (N, M):
        raise DomainError(f"noise must have shape (R, {N}, {M})")
    f = np.broadcast_to(np.asarray(f_vals, dtype=float), (R, M))
    out = np.zeros((R, K + 1, N + 1, M + 1))
    u0 = np.einsum("jxm,rm->rjx", tab.G[1:], f) / tab.hT[1:]
    out[:, 0, 1:] = u0
    out[:, 0, 0, 1:] = f
    out[:, 0, 0, 0] = 0.0 if route == "dirichlet" else wall
    scale = grid.noise_strength * math.sqrt(grid.dt / grid.dx)
    for k in range(K):
        src = np.zeros((R, N + 1, M))
        src[:, :N] = tab.hS[:N] * out[:, k, :N, 1:] * xi * scale
        out[:, k + 1] = _lag_sum(tab, src, N) / tab.hT
    return out


@dataclass
class ChaosGrid:
    params: GridParams
    route: str
    noise: np.ndarray
    initial: InitialData
    iterates: np.ndarray

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def solution(self) -> np.ndarray:
        return self.iterates.sum(axis=0)


def picard_solve(grid: GridParams, initial: InitialData, rng: RngStream | None = None,
                 noise: np.ndarray | None = None, route: str = "normalized",
                 K: int | None = None) -> ChaosGrid:
    """One realization; ``noise`` (shape ``(N, M)``) overrides drawing from ``rng``.

    A zero noise array gives the deterministic solution ``u_0``.
    """
    if K is not None:
        if not 0 <= K <= K_MAX:
            raise ConfigError(f"truncation order {K} outside 0..{K_MAX}")
        grid = GridParams(grid.dt, grid.dx, grid.T_max, grid.X_max, K, grid.noise_strength)
    if noise is None:
        if rng is None:
            raise ConfigError("give a random stream or a noise array")
        noise = rng.normal((grid.N, grid.M))
    noise = np.asarray(noise, dtype=float)
    it = solve_batch(grid, initial.values, initial.wall, noise[None], route)[0]
    return ChaosGrid(grid, route, noise, initial, it)


def _final_at(grid: GridParams, route: str, f_vals: np.ndarray, xi: np.ndarray,
              iterates: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Batched solution at ``T_max`` and arbitrary points ``X`` from stored iterates."""
    G, hT = _route_tables(grid, route, X)
    tab = kernel_tables(grid, route)
    N = grid.N
    scale = grid.noise_strength * math.sqrt(grid.dt / grid.dx)
    # the integrand is linear in the iterate, so sum orders 0..K-1 first
    src = tab.hS[:N] * iterates[:, : grid.K, :N, 1:].sum(axis=1) * xi * scale
    lagged = G[N - np.arange(N)]
    total = np.asarray(f_vals) @ G[N].T + np.einsum("rim,ixm->rx", src, lagged)
    return total / hT[N]


def evaluate_final(cg: ChaosGrid, X) -> np.ndarray:
    """Solution at the final time ``T_max`` at arbitrary ``X`` (same noise, same iterates)."""
    X = np.atleast_1d(np.asarray(X, dtype=float))
    return _final_at(cg.params, cg.route, cg.initial.values[None], cg.noise[None],
                     cg.iterates[None], X)[0]


# -- exact second moments ---------------------------------------------------------

def second_moment_series(grid: GridParams, cov: np.ndarray, route: str = "normalized",
                         K: int | None = None, wall_sq: float = 1.0) -> np.ndarray:
    """``F[k, j, X] = E[u_k(T_j, X)^2]`` of the discrete scheme, exactly.

    ``cov`` is ``E[f(Y_m) f(Y_m')]``.  ``F_0 = c^T cov c`` with the ``u_0``
    weights ``c``; ``F_{k+1}(T_j, X) = gamma^2 (dt/dx) sum_{i<j} sum_m
    (G_{j-i}(X, m) hS(i, m) / hT(j, X))^2 F_k(S_i, Y_m)``.
    """
    tab = kernel_tables(grid, route)
    K = grid.K if K is None else K
    N, M = grid.N, grid.M
    F = np.zeros((K + 1, N + 1, M + 1))
    for j in range(1, N + 1):
        c = tab.G[j] / tab.hT[j][:, None]
        F[0, j] = np.einsum("xm,mn,xn->x", c, cov, c)
    F[0, 0, 1:] = np.diag(cov)
    F[0, 0, 0] = 0.0 if route == "dirichlet" else wall_sq
    G2 = tab.G ** 2
    h2 = tab.hT ** 2
    w = grid.noise_strength ** 2 * grid.dt / grid.dx
    for k in range(K):
        src = np.zeros((N + 1, M))
        src[:N] = tab.hS[:N] ** 2 * F[k, :N, 1:] * w
        acc = np.zeros((N + 1, M + 1))
        for l in range(1, N + 1):
            acc[l:] += src[: N + 1 - l] @ G2[l].T
        F[k + 1] = acc / h2
    return F


def truncation_decay(grid: GridParams, initial: InitialData, a: float = 0.0,
                     route: str = "normalized") -> dict:
    """Exact ``F_k = sup_X e^{-aX} E[u_k(T_max, X)^2]`` with the factorial-decay envelope fit.

    Fits ``log F_k + log (k/2)! ~ log B + k log C`` and reports whether the
    sequence is eventually decreasing.
    """
    F = second_moment_series(grid, initial.covariance(), route)
    X = grid.x_out
    Fk = np.array([float(np.max(np.exp(-a * X) * F[k, -1])) for k in range(grid.K + 1)])
    k = np.arange(grid.K + 1)
    y = np.log(np.maximum(Fk, 1e-300)) + np.array([math.lgamma(kk / 2 + 1) for kk in k])
    logC = float(np.polyfit(k[1:], y[1:], 1)[0]) if grid.K >= 2 else 0.0
    ratios = (Fk[1:] / np.where(Fk[:-1] > 0, Fk[:-1], np.inf)).tolist()
    tail = Fk[1:]
    eventually = bool(np.all(np.diff(tail[len(tail) // 2:]) < 0)) if tail.size > 1 else True
    return {"F": Fk.tolist(), "ratios": ratios, "C": math.exp(logC),
            "eventually_decreasing": eventually, "last_term": float(Fk[-1])}


# -- experiments -------------------------------------------------------------------

def _batch_draws(grid: GridParams, initial_kind: str, mu: float, sigma: float):
    def draw(stream: RngStream, m: int):
        xi = stream.child(0).normal((m, grid.N, grid.M))
        if initial_kind == "gbm":
            f = gbm_values(grid, stream.child(1).normal((m, grid.M)), mu, sigma)
        else:
            f = None
        return xi, f
    return draw


def noise_self_test(grid: GridParams, seed: int, significance: float = 1e-3) -> TestReport:
    """KS test of one realization's unscaled noise cells against the standard normal."""
    xi = RngStream(seed, 0).child(0).normal((grid.N, grid.M))
    return ks_one_sample(xi.ravel(), normal_cdf, significance, name="noise_cells_normal")


def mean_check(grid: GridParams, samples: int, seed: int, X_points: Sequence[float] = (0.0, 0.5, 1.0, 1.5, 2.0),
               initial: InitialData | None = None, workers: int | None = None,
               z_max: float = 3.0, block: int = 512) -> TestReport:
    """Empirical mean of the normalized solution at ``T_max`` against ``u_0``.

    Every chaos term of order ``>= 1`` has mean zero, so the comparison is
    exact up to Monte Carlo error.  Reports the largest z-score over
    ``X_points`` (each snapped to the nearest output column).
    """
    initial = initial or InitialData.constant(grid)
    tab = kernel_tables(grid, "normalized")
    cols = [int(np.argmin(np.abs(grid.x_out - X))) for X in X_points]
    draw = _batch_draws(grid, "function", 0.0, 0.0)

    def one(stream: RngStream, m: int):
        xi, _ = draw(stream, m)
        it = solve_batch(grid, initial.values, initial.wall, xi, "normalized", tab)
        sol = it.sum(axis=1)[:, -1, cols]
        return sol

    vals = np.concatenate(map_blocks(one, samples, seed, workers, block, sub=(7,)))
    u0 = solve_batch(grid, initial.values, initial.wall, np.zeros((1, grid.N, grid.M)), "normalized", tab)[0, 0, -1, cols]
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])
    z = np.abs(mean - u0) / np.where(se > 0, se, np.inf)
    worst = float(z.max())
    return TestReport("spde_mean", worst, worst <= z_max, tolerance=z_max, sizes=[int(vals.shape[0])],
                      details={"X": [float(grid.x_out[c]) for c in cols], "mean": mean.tolist(),
                               "u0": u0.tolist(), "stderr": se.tolist()},
                      provenance={"dt": grid.dt, "dx": grid.dx, "T": grid.T_max, "K": grid.K, "seed": seed})


def relation_mismatch(grid: GridParams, initial: InitialData, noise: np.ndarray,
                      T_min: float | None = None) -> tuple[float, ChaosGrid, ChaosGrid]:
    """``max |Z h - Z_Dir| / max |Z_Dir|`` over midpoints and times ``>= T_min`` (default ``T_max``)."""
    a = picard_solve(grid, initial, noise=noise, route="normalized")
    b = picard_solve(grid, initial, noise=noise, route="dirichlet")
    T_min = grid.T_max if T_min is None else T_min
    rows = grid.times >= T_min - 1e-12
    X = grid.midpoints
    h = np.array([survival_probability(T, X) for T in grid.times[rows]])
    za = a.solution[rows][:, 1:] * h
    zb = b.solution[rows][:, 1:]
    return float(np.abs(za - zb).max() / np.abs(zb).max()), a, b


def coarsen_noise(xi: np.ndarray) -> np.ndarray:
    """Aggregate standard normal cell noise onto a grid with doubled ``dt`` and ``dx``.

    Each coarse cell is the sum of its four fine cells divided by 2, which is
    again standard normal and is the same white noise integrated over the
    coarse cell.
    """
    xi = np.asarray(xi, dtype=float)
    *lead, N, M = xi.shape
    if N % 2 or M % 2:
        raise DomainError("fine noise needs even extents")
    return xi.reshape(*lead, N // 2, 2, M // 2, 2).sum(axis=(-3, -1)) / 2.0


def dirichlet_relation_check(grid: GridParams, seed: int, tolerance: float, realizations: int = 8,
                             initial: Callable[[np.ndarray], np.ndarray] | None = None) -> TestReport:
    """``Z h = Z_Dir`` on shared noise at ``grid`` and at one refinement.

    Noise is drawn on the fine grid and aggregated onto the coarse one, so both
    levels see the same white noise.  The mismatch ``max |Z h - Z_Dir| / max
    |Z_Dir|`` at ``T_max`` is averaged over ``realizations``.  Passes when the
    average decreases under refinement, the fine average is below
    ``tolerance`` and the Dirichlet wall column is identically 0.
    """
    f = initial or (lambda y: np.ones_like(y))
    fine = grid.refined()
    stream = RngStream(seed, 0).child(0)
    levels = [{"dt": g.dt, "dx": g.dx, "mismatch": [], "dirichlet_wall_max": 0.0} for g in (grid, fine)]
    for r in range(realizations):
        xf = stream.normal((fine.N, fine.M))
        for lvl, (g, xi) in enumerate(((grid, coarsen_noise(xf)), (fine, xf))):
            mm, _, b = relation_mismatch(g, InitialData.function(f, g), xi)
            levels[lvl]["mismatch"].append(mm)
            levels[lvl]["dirichlet_wall_max"] = max(levels[lvl]["dirichlet_wall_max"],
                                                    float(np.abs(b.solution[:, 0]).max()))
    for l in levels:
        l["mean_mismatch"] = float(np.mean(l["mismatch"]))
    dec = levels[1]["mean_mismatch"] < levels[0]["mean_mismatch"]
    ok = dec and levels[1]["mean_mismatch"] <= tolerance and all(l["dirichlet_wall_max"] == 0 for l in levels)
    return TestReport("dirichlet_relation", levels[1]["mean_mismatch"], ok, tolerance=tolerance,
                      sizes=[realizations], details={"levels": levels, "decreasing": dec},
                      provenance={"seed": seed, "T": grid.T_max, "X_max": grid.X_max, "K": grid.K})


def wall_derivative_quadrature(T: float, f: Callable[[np.ndarray], np.ndarray], cutoff: float = 12.0) -> float:
    """``d/dX int P_T^Dir(X, Y) f(Y) dY`` at ``X = 0``, i.e. ``int 2Y/T P_T(Y) f(Y) dY``."""
    hi = cutoff * math.sqrt(T)
    return integrate(lambda y: 2.0 * y / T * heat_kernel(T, y) * f(y), 0.0, hi)


def derivative_limit_experiment(grid: GridParams, X_ladder: Sequence[float], seed: int,
                                realizations: int = 32,
                                initial: Callable[[np.ndarray], np.ndarray] | None = None) -> TestReport:
    """Ratio ``Z_Dir(T, X) / (X sqrt(2/(pi T)) Z(T, 0))`` along a ladder ``X -> 0``.

    Each realization solves both routes on one shared noise field.  The
    deviation reported per ladder point is the root mean square of
    ``ratio - 1`` over the realizations; the check passes when it decreases
    strictly along the ladder.
    """
    f = initial or (lambda y: np.ones_like(y))
    if min(X_ladder) <= 0:
        raise DomainError("ladder points must be positive")
    data = InitialData.function(f, grid)
    xi = RngStream(seed, 0).child(0).normal((realizations, grid.N, grid.M))
    a = solve_batch(grid, data.values, data.wall, xi, "normalized")
    b = solve_batch(grid, data.values, data.wall, xi, "dirichlet")
    T = grid.T_max
    wall = a.sum(axis=1)[:, -1, 0]
    X = np.asarray(X_ladder, dtype=float)
    zd = _final_at(grid, "dirichlet", data.values[None], xi, b, X)
    ratio = zd / (X[None, :] * SQRT_2_OVER_PI / math.sqrt(T) * wall[:, None])
    dev = np.sqrt(np.mean((ratio - 1.0) ** 2, axis=0))
    dec = bool(np.all(np.diff(dev) < 0))
    return TestReport("derivative_limit", float(dev[-1]), dec, sizes=[realizations],
                      details={"X": X.tolist(), "rms_deviation": dev.tolist(),
                               "mean_ratio": ratio.mean(axis=0).tolist(),
                               "wall_mean": float(wall.mean())},
                      provenance={"seed": seed, "dt": grid.dt, "dx": grid.dx, "T": T})


def polymer_to_she_convergence(n_values: Sequence[int], T: float, X: float, samples: int, seed: int,
                               grid: GridParams | None = None, workers: int | None = None,
                               zero_disorder: bool = False) -> dict:
    """Moments of the rescaled quadrant polymer against the SPDE's moments.

    The polymer field is ``Z(T, X)`` with walk length ``2 floor(nT)``, start
    ``round(sqrt(2n) X)``, ``beta = n^{-1/4}``, standard normal disorder and
    boundary data ``z0``.  Under this scaling the walk converges to Brownian
    motion, the disorder to white noise of strength ``2^{3/4}`` and ``z0`` to a
    geometric Brownian motion with ``sigma^2 = sqrt 2`` and ``mu = 0``.

    SPDE side: the first moment is ``int M_T^T(X, Y) E f(Y) dY`` by
    quadrature (``E f = 1``); the second moment is the exact ``k <= 2`` chaos
    sum of the discretized equation.  ``zero_disorder`` switches off both the
    disorder and the noise and uses ``z0 = f = 1``.
    """
    from .backend import core
    from .continuum_kernels import meander_kernel
    from .discrete_kernels import KernelWorkspace
    from .polymer import _quadrant_setup

    gamma = 0.0 if zero_disorder else 2 ** 0.75
    sig = 0.0 if zero_disorder else 2 ** 0.25
    grid = grid or GridParams(0.02, 0.05, T, 5.0, K=2, noise_strength=gamma)
    mean = integrate(lambda y: meander_kernel(T, T, X, y), 0.0, X + 12 * math.sqrt(T))
    F = second_moment_series(grid, gbm_covariance(grid.midpoints, 0.0, sig), "normalized", K=2)
    col = int(np.argmin(np.abs(grid.x_out - X)))
    chaos = F[:, -1, col]
    rows = []
    for n in n_values:
        L = 2 * int(math.floor(n * T + 1e-9))
        x = int(round(math.sqrt(2 * n) * X))
        W = x + L + 2
        ws = KernelWorkspace(L)
        Q = _quadrant_setup(ws, L, W)
        beta = 0.0 if zero_disorder else n ** -0.25

        def one(stream: RngStream, m: int):
            om = stream.child(0).normal((m, L, W))
            z0 = np.ascontiguousarray(np.cumprod(1.0 + beta * stream.child(1).normal((m, W)), axis=1))
            fac = np.ascontiguousarray(1.0 + beta * om)
            return core.fk_backward(z0, fac, Q, z0, None)[:, x]

        v = np.concatenate(map_blocks(one, samples, seed, workers, 128, sub=(n,)))
        rows.append({"n": n, "mean": float(v.mean()), "mean_stderr": float(v.std(ddof=1) / math.sqrt(v.size)),
                     "variance": float(v.var(ddof=1)), "samples": int(v.size)})
    return {"T": T, "X": X, "spde_mean": float(mean), "spde_chaos_second_moments": chaos.tolist(),
            "spde_variance_k2": float(chaos.sum() - mean * mean), "ladder": rows}


def field_csv(cg: ChaosGrid) -> str:
    sol = cg.solution
    lines = ["T,X,value"]
    for j, T in enumerate(cg.params.times):
        for c, X in enumerate(cg.params.x_out):
            lines.append(f"{float(T)!r},{float(X)!r},{float(sol[j, c])!r}")
    return "\n".join(lines) + "\n"
