"""Uniform measures on non-negative nearest-neighbour paths.

``P_x^n`` is the uniform law on paths ``s_0 = x, ..., s_n`` with
``|s_{i+1} - s_i| = 1`` and ``s_i >= 0``.  It is a time-inhomogeneous Markov
chain whose step from ``s`` at time ``i`` goes up with probability
``cp(1, n - i, s, s + 1)``.  Samplers draw one uniform per step and go up iff
the uniform does not exceed that probability, so a shared uniform sequence
also realises the monotone coupling of walkers started at neighbouring sites.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .backend import core as _default_core
from .discrete_kernels import KernelWorkspace
from .errors import DomainError
from .rng import DEFAULT_BLOCK, RngStream, block_sizes, default_workers

__all__ = [
    "PathSample",
    "CoupledPair",
    "TailCurve",
    "ENUMERATION_CAP",
    "enumerate_paths",
    "enumerate_path_array",
    "path_probability",
    "sample_path",
    "sample_paths",
    "sample_coupled_pair",
    "sample_coupled_pairs",
    "sample_coupled_family",
    "martingale_value",
    "martingale_identity_residual",
    "martingale_increment_max",
    "submartingale_gap",
    "moment_growth_constant",
    "exact_sup_tail",
    "concentration_tail",
    "paths_csv",
]

ENUMERATION_CAP = 24
CHUNK = 256


@dataclass(frozen=True)
class PathSample:
    start: int
    horizon: int
    sites: tuple[int, ...]

    def __post_init__(self) -> None:
        s = self.sites
        if len(s) != self.horizon + 1 or s[0] != self.start:
            raise DomainError("path does not match its start/horizon")
        if min(s) < 0 or any(abs(b - a) != 1 for a, b in zip(s, s[1:])):
            raise DomainError("not a non-negative nearest-neighbour path")


@dataclass(frozen=True)
class CoupledPair:
    lower: PathSample
    upper: PathSample

    def __post_init__(self) -> None:
        if self.lower.horizon != self.upper.horizon:
            raise DomainError("coupled paths must share the horizon")

    @property
    def horizon(self) -> int:
        return self.lower.horizon

    def max_distance(self) -> int:
        a = np.asarray(self.lower.sites)
        b = np.asarray(self.upper.sites)
        return int(np.abs(a - b).max())


# -- enumeration ------------------------------------------------------------

def enumerate_path_array(x: int, n: int) -> np.ndarray:
    """All paths of ``Omega_x^n`` as rows of an integer array, lexicographic in steps (down first)."""
    if x < 0:
        raise DomainError("start must be non-negative")
    if n > ENUMERATION_CAP:
        raise DomainError(
            f"enumeration of horizon {n} refused: the cap is {ENUMERATION_CAP} "
            "because the path count grows like 2^n; use the samplers instead")
    paths = np.full((1, 1), x, dtype=np.int32)
    for _ in range(n):
        last = paths[:, -1]
        down = paths[last > 0]
        down = np.hstack([down, down[:, -1:] - 1])
        up = np.hstack([paths, paths[:, -1:] + 1])
        both = np.concatenate([down, up])
        # keep the down-before-up order per parent
        parent = np.concatenate([np.flatnonzero(last > 0), np.arange(len(paths))])
        order = np.lexsort((np.r_[np.zeros(len(down)), np.ones(len(up))], parent))
        paths = both[order]
    return paths


def enumerate_paths(x: int, n: int) -> list[PathSample]:
    return [PathSample(x, n, tuple(int(v) for v in row)) for row in enumerate_path_array(x, n)]


def path_probability(ws: KernelWorkspace, sites: Sequence[int]) -> float:
    """Product of one-step conditioned transitions along ``sites``."""
    n = len(sites) - 1
    prob = 1.0
    for k in range(n):
        s, t = int(sites[k]), int(sites[k + 1])
        q = ws.up_probability(s, n - k)
        prob *= q if t == s + 1 else 1.0 - q
    return prob


# -- samplers ---------------------------------------------------------------

def _workspace_for(n: int, x: int, ws: KernelWorkspace | None) -> KernelWorkspace:
    if ws is not None and ws.horizon_max >= n:
        return ws
    return KernelWorkspace(max(n, 1))


def _chunks(steps: int, chunk: int = CHUNK):
    t = 0
    while t < steps:
        L = min(chunk, steps - t)
        yield t, L
        t += L


def _run_blocks(fn: Callable[[int], None], nblocks: int, workers: int) -> None:
    if workers <= 1 or nblocks <= 1:
        for b in range(nblocks):
            fn(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(fn, range(nblocks)))


def _drive(ws: KernelWorkspace, n: int, steps: int, starts: Sequence[np.ndarray],
           streams: Sequence[RngStream], observe: Callable[[int, int, list], None],
           coupled: bool = False, shared_uniform: bool = False,
           workers: int = 1, core=None) -> None:
    """Advance every block of walkers through ``steps`` steps of ``P^n``.

    ``starts[b]`` holds the start sites of block ``b`` (an ``(m, 2)`` array
    for coupled pairs).  ``observe(b, t0, outs)`` receives the sites after
    each step of the chunk starting at ``t0``.
    """
    core = core or _default_core
    pos = [np.ascontiguousarray(s, dtype=np.int64).copy() for s in starts]
    top = max((int(p.max()) for p in pos if p.size), default=0)
    for t0, L in _chunks(steps):
        W = top + t0 + L + 2
        Q = np.ascontiguousarray(ws.up_table(n, t0, L, W))

        def one(b: int) -> None:
            p = pos[b]
            m = p.shape[0]
            if shared_uniform:
                U = np.ascontiguousarray(np.repeat(streams[b].uniform((1, L)), m, axis=0))
            else:
                U = streams[b].uniform((m, L))
            if coupled:
                lo = np.ascontiguousarray(p[:, 0])
                hi = np.ascontiguousarray(p[:, 1])
                out_lo = np.empty((m, L), dtype=np.int64)
                out_hi = np.empty((m, L), dtype=np.int64)
                core.advance_coupled(lo, hi, U, Q, out_lo, out_hi)
                p[:, 0] = lo
                p[:, 1] = hi
                observe(b, t0, [out_lo, out_hi])
            else:
                out = np.empty((m, L), dtype=np.int64)
                core.advance_walkers(p, U, Q, out)
                observe(b, t0, [out])

        _run_blocks(one, len(pos), workers)


def sample_paths(x: int, n: int, samples: int, seed: int, workers: int | None = None,
                 ws: KernelWorkspace | None = None, core=None,
                 block: int = DEFAULT_BLOCK) -> np.ndarray:
    """``samples`` independent paths from ``P_x^n`` as an ``(samples, n+1)`` array.

    Sample ``j`` lives in block ``j // block`` and consumes that block's stream,
    so the output does not depend on ``workers``.
    """
    if x < 0 or n < 0:
        raise DomainError("need x >= 0 and n >= 0")
    ws = _workspace_for(n, x, ws)
    sizes = block_sizes(samples, block)
    paths = np.empty((samples, n + 1), dtype=np.int64)
    paths[:, 0] = x
    offsets = np.cumsum([0] + sizes)

    def observe(b, t0, outs):
        paths[offsets[b] : offsets[b + 1], 1 + t0 : 1 + t0 + outs[0].shape[1]] = outs[0]

    streams = [RngStream(seed, b) for b in range(len(sizes))]
    _drive(ws, n, n, [np.full(m, x) for m in sizes], streams, observe,
           workers=default_workers() if workers is None else workers, core=core)
    return paths


def sample_path(x: int, n: int, rng: RngStream, ws: KernelWorkspace | None = None) -> PathSample:
    ws = _workspace_for(n, x, ws)
    out: list[np.ndarray] = []
    _drive(ws, n, n, [np.array([x])], [rng], lambda b, t0, o: out.append(o[0][0]))
    sites = np.concatenate([[x], *out]) if out else np.array([x])
    return PathSample(x, n, tuple(int(v) for v in sites))


def sample_coupled_pairs(x: int, n: int, samples: int, seed: int, workers: int | None = None,
                         ws: KernelWorkspace | None = None, core=None,
                         block: int = DEFAULT_BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Pairs of paths from ``x`` and ``x + 1`` driven by one uniform per step."""
    ws = _workspace_for(n + 1, x, ws)
    sizes = block_sizes(samples, block)
    lower = np.empty((samples, n + 1), dtype=np.int64)
    upper = np.empty((samples, n + 1), dtype=np.int64)
    lower[:, 0] = x
    upper[:, 0] = x + 1
    offsets = np.cumsum([0] + sizes)

    def observe(b, t0, outs):
        sl = slice(offsets[b], offsets[b + 1])
        L = outs[0].shape[1]
        lower[sl, 1 + t0 : 1 + t0 + L] = outs[0]
        upper[sl, 1 + t0 : 1 + t0 + L] = outs[1]

    starts = [np.column_stack([np.full(m, x), np.full(m, x + 1)]) for m in sizes]
    streams = [RngStream(seed, b) for b in range(len(sizes))]
    _drive(ws, n, n, starts, streams, observe, coupled=True,
           workers=default_workers() if workers is None else workers, core=core)
    return lower, upper


def sample_coupled_pair(x: int, n: int, rng: RngStream,
                        ws: KernelWorkspace | None = None) -> CoupledPair:
    ws = _workspace_for(n + 1, x, ws)
    lo_parts: list[np.ndarray] = []
    hi_parts: list[np.ndarray] = []

    def observe(b, t0, outs):
        lo_parts.append(outs[0][0])
        hi_parts.append(outs[1][0])

    _drive(ws, n, n, [np.array([[x, x + 1]])], [rng], observe, coupled=True)
    lo = np.concatenate([[x], *lo_parts])
    hi = np.concatenate([[x + 1], *hi_parts])
    return CoupledPair(PathSample(x, n, tuple(map(int, lo))),
                       PathSample(x + 1, n, tuple(map(int, hi))))


def sample_coupled_family(starts: Sequence[int], n: int, rng: RngStream,
                          ws: KernelWorkspace | None = None) -> np.ndarray:
    """Walkers from every site in ``starts`` sharing a single uniform per step.

    Row ``r`` is a path from ``P_{starts[r]}^n``; walkers started at
    neighbouring sites stay at distance one forever.
    """
    starts = np.asarray(starts, dtype=np.int64)
    ws = _workspace_for(n, int(starts.max(initial=0)), ws)
    parts: list[np.ndarray] = []
    _drive(ws, n, n, [starts], [rng], lambda b, t0, o: parts.append(o[0]),
           shared_uniform=True)
    return np.hstack([starts[:, None], *parts])


# -- martingale and kernel-level checks ----------------------------------------

def martingale_value(x: int, i: int, n: int, ws: KernelWorkspace | None = None) -> float:
    """``f(x, i) = -1 + (x + 1) / psi(x, n - i)``, the mean of ``S_n`` given ``S_i = x``."""
    ws = _workspace_for(n, x, ws)
    return ws.martingale(x, i, n)


def _up_matrix(ws: KernelWorkspace, M: int, xmax: int) -> np.ndarray:
    return ws.up_table(M, 0, 1, xmax + 1)[0]


def martingale_identity_residual(ws: KernelWorkspace, n_max: int, x_max: int) -> float:
    """max |q f(x+1, i+1) + (1-q) f(x-1, i+1) - f(x, i)| over the grid."""
    worst = 0.0
    x = np.arange(x_max + 1)
    for n in range(1, n_max + 1):
        for i in range(n):
            M = n - i
            q = _up_matrix(ws, M, x_max)
            psi_now = ws.psi_row(M, x_max)
            psi_next = ws.psi_row(M - 1, x_max + 1)
            f_now = -1.0 + (x + 1) / psi_now
            f_up = -1.0 + (x + 2) / psi_next[1:]
            f_dn = np.where(x > 0, -1.0 + x / psi_next[np.maximum(x - 1, 0)], 0.0)
            res = np.abs(q * f_up + (1.0 - q) * f_dn - f_now)
            worst = max(worst, float(res.max()))
    return worst


def martingale_increment_max(ws: KernelWorkspace, n_max: int, x_max: int) -> float:
    """Largest |f(s', i+1) - f(s, i)| over all reachable one-step moves."""
    worst = 0.0
    x = np.arange(x_max + 1)
    for n in range(1, n_max + 1):
        for i in range(n):
            M = n - i
            psi_now = ws.psi_row(M, x_max)
            psi_next = ws.psi_row(M - 1, x_max + 1)
            f_now = -1.0 + (x + 1) / psi_now
            f_up = -1.0 + (x + 2) / psi_next[1:]
            d = np.abs(f_up - f_now)
            f_dn = -1.0 + x[1:] / psi_next[: x_max]
            d_dn = np.abs(f_dn - f_now[1:])
            worst = max(worst, float(d.max()), float(d_dn.max(initial=0.0)))
    return worst


def submartingale_gap(ws: KernelWorkspace, lam: float, n_max: int, x_max: int) -> float:
    """min of ``E[exp(lam S_{i+1}) | S_i = x] exp(-lam x) - 1`` over the grid (>= 0 expected)."""
    worst = math.inf
    up, down = math.exp(lam), math.exp(-lam)
    for M in range(1, n_max + 1):
        q = _up_matrix(ws, M, x_max)
        worst = min(worst, float((q * up + (1.0 - q) * down - 1.0).min()))
    return worst


def moment_growth_constant(ws: KernelWorkspace, p: float, n_values: Sequence[int],
                           x_values: Sequence[int] = (0, 2, 8), m_step: int = 1) -> dict:
    """sup of ``E|S_k - S_m|^p / (k - m)^{p/2}`` computed exactly from kernel rows."""
    worst = 0.0
    where: dict = {}
    for n in n_values:
        for x in x_values:
            for m in range(0, n, m_step):
                v = ws.conditioned_row(m, n, x, x + m)
                ys = np.flatnonzero(v > 0)
                width = x + n
                # law of S_k - S_m for every k > m, mixing over S_m = y
                acc = np.zeros(n - m)
                for y in ys:
                    for d in range(1, n - m + 1):
                        row = ws.conditioned_row(d, n - m, int(y), width)
                        z = np.arange(width + 1)
                        acc[d - 1] += v[y] * float(row @ np.abs(z - y) ** p)
                ratio = acc / np.arange(1, n - m + 1) ** (p / 2)
                j = int(np.argmax(ratio))
                if ratio[j] > worst:
                    worst = float(ratio[j])
                    where = {"n": n, "x": x, "m": m, "k": m + j + 1}
    return {"p": p, "implied_constant": worst, "argmax": where}


# -- concentration ---------------------------------------------------------------

def exact_sup_tail(ws: KernelWorkspace, x: int, n: int, k: int,
                   u_values: Sequence[float]) -> np.ndarray:
    """Exact ``P_x^n(max_{i<=k} |S_i - x| > u)`` by a forward pass killed outside each band."""
    u_values = np.asarray(u_values, dtype=float)
    if k > n or k < 0:
        raise DomainError("need 0 <= k <= n")
    W = x + k + 2
    mass = np.zeros((len(u_values), W))
    mass[:, x] = 1.0
    s = np.arange(W)
    inside = np.abs(s[None, :] - x) <= u_values[:, None]
    for t0, L in _chunks(k):
        Q = ws.up_table(n, t0, L, W)
        for j in range(L):
            q = Q[j]
            nxt = np.zeros_like(mass)
            nxt[:, 1:] += mass[:, :-1] * q[:-1]
            nxt[:, :-1] += mass[:, 1:] * (1.0 - q[1:])
            mass = nxt * inside
    return np.clip(1.0 - mass.sum(axis=1), 0.0, 1.0)


@dataclass
class TailCurve:
    x: int
    n: int
    k: int
    u: np.ndarray
    p_hat: np.ndarray
    stderr: np.ndarray
    samples: int
    flagged: np.ndarray

    def to_csv(self) -> str:
        lines = ["u,p_hat,stderr"]
        lines += [f"{u!r},{p!r},{s!r}" for u, p, s in zip(self.u.tolist(), self.p_hat.tolist(),
                                                         self.stderr.tolist())]
        return "\n".join(lines) + "\n"


def concentration_tail(x: int, n: int, k: int, u_grid: Sequence[float], samples: int,
                       seed: int, workers: int | None = None,
                       ws: KernelWorkspace | None = None, core=None,
                       min_exceedances: int = 10, block: int = DEFAULT_BLOCK) -> TailCurve:
    """Empirical ``P(max_{i<=k} |S_i - x| > u)`` with binomial standard errors.

    Only the first ``k`` steps are simulated; the running maximum deviation
    is kept per walker instead of the path.  Grid points with fewer than
    ``min_exceedances`` exceedances are flagged.
    """
    if samples < 1000:
        raise DomainError("concentration_tail needs at least 1000 samples")
    if not 0 <= k <= n:
        raise DomainError("need 0 <= k <= n")
    ws = _workspace_for(n, x, ws)
    sizes = block_sizes(samples, block)
    sup = [np.zeros(m, dtype=np.int64) for m in sizes]

    def observe(b, t0, outs):
        dev = np.abs(outs[0] - x).max(axis=1)
        np.maximum(sup[b], dev, out=sup[b])

    streams = [RngStream(seed, b) for b in range(len(sizes))]
    _drive(ws, n, k, [np.full(m, x) for m in sizes], streams, observe,
           workers=default_workers() if workers is None else workers, core=core)
    allsup = np.concatenate(sup)
    u = np.asarray(u_grid, dtype=float)
    counts = (allsup[None, :] > u[:, None]).sum(axis=1)
    p = counts / samples
    se = np.sqrt(p * (1 - p) / samples)
    return TailCurve(x, n, k, u, p, se, samples, counts < min_exceedances)


def paths_csv(paths: np.ndarray) -> str:
    lines = ["sample_id,i,s_i"]
    for sid, row in enumerate(np.asarray(paths)):
        lines.extend(f"{sid},{i},{int(s)}" for i, s in enumerate(row))
    return "\n".join(lines) + "\n"
