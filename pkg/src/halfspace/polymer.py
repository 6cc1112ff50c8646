"""Half-space directed polymers.

Two geometries:

* **octant**: lattice points ``(i, j)`` with ``i >= j >= 0``; the partition
  function sums, over up-right paths from ``(0, 0)``, the product of the point
  weights ``zeta(i, j)`` along the path.
* **quadrant**: the Feynman-Kac form over the conditioned walk.  With walk
  length ``L``, disorder ``omega[t, s]`` (time ``t``, height ``s``), strength
  ``beta`` and terminal data ``z0``::

      Z(x) = E_x^L[ z0(S_L) prod_{t < L} (1 + beta omega[t, S_t]) ]

  Disorder is indexed forward in walk time.  With ``beta = k^{-1/4}`` and
  ``L = 2n`` this is the modified partition function ``Z_k(n, x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .backend import core as _default_core
from .continuum_kernels import two_phi_minus_one
from .discrete_kernels import KernelWorkspace
from .errors import ConfigError, DomainError, StatisticalError
from .meander_walks import enumerate_path_array
from .rng import DEFAULT_BLOCK, RngStream, block_sizes, default_workers, map_blocks
from .stattests import TestReport, ks_two_sample, moment_compare

__all__ = [
    "WeightSpec",
    "Environment",
    "BoundaryData",
    "PartitionValue",
    "BULK", "BOUNDARY_ROW", "DIAGONAL", "OUTSIDE",
    "loggamma_specs",
    "sample_weights",
    "generate_environment",
    "generate_boundary",
    "octant_partition_dp",
    "octant_table",
    "octant_point_weights",
    "quadrant_partition_dp",
    "quadrant_partition_batch",
    "quadrant_value_field",
    "quadrant_partition_enum",
    "mild_equation_residual",
    "chaos_expansion_eval",
    "chaos_second_moments",
    "chaos_moment_envelope",
    "stopping_time",
    "reduction_pathwise",
    "reduction_error",
    "octant_reduction_experiment",
    "loggamma_samples",
    "loggamma_identity_experiment",
    "rescaled_partition",
    "octant_normalization",
    "holder_moment_audit",
]

BULK, BOUNDARY_ROW, DIAGONAL, OUTSIDE = 0, 1, 2, -1
_TAG_NAMES = {BULK: "bulk", BOUNDARY_ROW: "boundary_row", DIAGONAL: "diagonal"}


@dataclass(frozen=True)
class WeightSpec:
    """Law of a family of disorder weights.

    ``standard_normal``; ``inverse_gamma`` with shape ``theta`` and scale
    ``scale`` (the law of ``scale * X`` with ``1/X`` a Gamma(theta) variate);
    ``custom``: normal with mean ``mu n^{-1/4}`` and standard deviation
    ``sigma``; ``zero``: all weights 0 (disorder switched off).
    """

    kind: str = "standard_normal"
    theta: float | None = None
    scale: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    n: int = 1
    A: float = 0.0
    require_variance: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("standard_normal", "inverse_gamma", "custom", "zero"):
            raise ConfigError(f"unknown weight kind {self.kind!r}")
        if self.kind == "inverse_gamma":
            if self.theta is None or self.theta <= 0 or self.scale <= 0:
                raise ConfigError("inverse_gamma needs theta > 0 and scale > 0")
            if self.require_variance and self.theta <= 2:
                raise ConfigError(f"inverse_gamma with theta={self.theta} has infinite variance")
        if self.n < 1:
            raise ConfigError("scale n must be positive")

    @property
    def mean(self) -> float:
        if self.kind == "inverse_gamma":
            return self.scale / (self.theta - 1)
        if self.kind == "custom":
            return self.mu * self.n ** -0.25
        return 0.0

    @property
    def variance(self) -> float:
        if self.kind == "inverse_gamma":
            t = self.theta
            return self.scale ** 2 / ((t - 1) ** 2 * (t - 2))
        if self.kind == "zero":
            return 0.0
        return self.sigma ** 2 if self.kind == "custom" else 1.0


def loggamma_specs(n: int, A: float = 0.0) -> tuple[WeightSpec, WeightSpec]:
    """Bulk and special inverse-gamma laws of the solvable log-gamma octant model.

    Bulk shape ``2 sqrt(n)``, special shape ``sqrt(n) + A + 1/2``, common scale
    ``(2 sqrt(n) - 1) / 2`` (half the reciprocal of the bulk mean).
    """
    r = math.sqrt(n)
    scale = 0.5 * (2 * r - 1)
    bulk = WeightSpec("inverse_gamma", theta=2 * r, scale=scale, n=n, A=A)
    special = WeightSpec("inverse_gamma", theta=r + A + 0.5, scale=scale, n=n, A=A)
    return bulk, special


def sample_weights(spec: WeightSpec, rng: RngStream, size) -> np.ndarray:
    if spec.kind == "zero":
        return np.zeros(size)
    if spec.kind == "standard_normal":
        return rng.normal(size)
    if spec.kind == "custom":
        return spec.mu * spec.n ** -0.25 + spec.sigma * rng.normal(size)
    # reciprocal of a Gamma(theta) variate; the scale multiplies afterwards
    return spec.scale * (1.0 / rng.gamma(spec.theta, size))


@dataclass
class Environment:
    geometry: str
    extent: tuple[int, int]
    weights: np.ndarray
    region_tags: np.ndarray
    spec: dict[str, WeightSpec]
    seed: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.geometry not in ("octant", "quadrant"):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.weights.shape != self.region_tags.shape:
            raise DomainError("weights and tags must align")

    def tag_name(self, i: int, j: int) -> str:
        return _TAG_NAMES[int(self.region_tags[i, j])]


def _octant_tags(P: int, Q: int, special: str | None) -> np.ndarray:
    i = np.arange(P + 1)[:, None]
    j = np.arange(Q + 1)[None, :]
    tags = np.where(j <= i, BULK, OUTSIDE)
    if special == "diagonal":
        tags = np.where((i == j), DIAGONAL, tags)
    elif special == "boundary_row":
        tags = np.where((j == 0), BOUNDARY_ROW, tags)
    elif special is not None:
        raise ConfigError(f"unknown special region {special!r}")
    return tags


def generate_environment(spec: WeightSpec, geometry: str, extent: tuple[int, int],
                         rng: RngStream, special_spec: WeightSpec | None = None,
                         special: str | None = None) -> Environment:
    """Independent weights on an octant ``(P, Q)`` or a quadrant ``(L, W)``.

    Octants draw the bulk from ``rng.child(0)`` and the special region
    (``diagonal`` or ``boundary_row``) from ``rng.child(1)``; each region is
    drawn over the full rectangle and masked, so one region's draws never
    depend on the other's.
    """
    a, b = extent
    if geometry == "quadrant":
        w = sample_weights(spec, rng.child(0), (a, b))
        return Environment("quadrant", (a, b), w, np.full((a, b), BULK), {"bulk": spec},
                           {"master_seed": rng.master_seed, "stream": rng.stream_index})
    if a < b:
        raise DomainError("octant extent needs P >= Q")
    tags = _octant_tags(a, b, special if special_spec is not None else None)
    w = sample_weights(spec, rng.child(0), (a + 1, b + 1))
    specs = {"bulk": spec}
    if special_spec is not None:
        ws = sample_weights(special_spec, rng.child(1), (a + 1, b + 1))
        w = np.where(tags == BULK, w, ws)
        specs[special] = special_spec
    w = np.where(tags == OUTSIDE, 0.0, w)
    return Environment("octant", (a, b), w, tags, specs,
                       {"master_seed": rng.master_seed, "stream": rng.stream_index})


@dataclass
class BoundaryData:
    """``z0(x) = prod_{i=0}^{x} (1 + n^{-1/4} omega_i)`` for ``x = 0..extent``."""

    values: np.ndarray
    omega: np.ndarray
    n: int

    @classmethod
    def from_weights(cls, omega, n: int) -> "BoundaryData":
        omega = np.asarray(omega, dtype=float)
        return cls(np.cumprod(1.0 + n ** -0.25 * omega), omega, n)

    @classmethod
    def constant(cls, extent: int, value: float = 1.0) -> "BoundaryData":
        return cls(np.full(extent + 1, float(value)), np.zeros(extent + 1), 1)


def generate_boundary(spec: WeightSpec, n: int, extent: int, rng: RngStream) -> BoundaryData:
    return BoundaryData.from_weights(sample_weights(spec, rng, extent + 1), n)


@dataclass
class PartitionValue:
    value: float
    geometry: str
    endpoint: Any
    n: int
    normalization: str = "raw"

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ArithmeticError("partition value is not finite")


# -- octant -----------------------------------------------------------------------

def octant_table(zeta, core=None) -> np.ndarray:
    """All ``Z(i, j)`` for a batch ``(R, P+1, Q+1)`` or a single ``(P+1, Q+1)`` weight array."""
    core = core or _default_core
    z = np.asarray(zeta, dtype=np.float64)
    single = z.ndim == 2
    z = np.ascontiguousarray(z[None] if single else z)
    out = core.octant_table(z)
    return out[0] if single else out


def octant_partition_dp(zeta, p: int, q: int | None = None, n: int = 1, core=None) -> PartitionValue:
    """Sum over octant up-right paths ``(0,0) -> (p,q)`` of the product of visited point weights."""
    q = p if q is None else q
    zeta = np.asarray(zeta, dtype=float)
    if not (p >= q >= 0) or p >= zeta.shape[0] or q >= zeta.shape[1]:
        raise DomainError(f"endpoint ({p}, {q}) outside the octant of the weight array")
    Z = octant_table(zeta[: p + 1, : q + 1], core=core)
    return PartitionValue(float(Z[p, q]), "octant", (p, q), n)


def octant_point_weights(omega, n: int, special: np.ndarray) -> np.ndarray:
    """Point weights ``(1 + (4n)^{-1/4} omega) / 2`` off ``special``, ``1 + n^{-1/4} omega`` on it.

    The factor 1/2 on every non-special point is the per-step killing
    penalty of the polymer form.
    """
    omega = np.asarray(omega, dtype=float)
    off = 0.5 * (1.0 + (4 * n) ** -0.25 * omega)
    on = 1.0 + n ** -0.25 * omega
    return np.where(special, on, off)


def octant_normalization(n: int, T: float, X: float) -> float:
    """``1 / (2 Phi((X + n^{-1/2}) / sqrt T) - 1)`` without cancellation at ``X = 0``."""
    return float(1.0 / two_phi_minus_one((X + n ** -0.5) / math.sqrt(T)))


def rescaled_partition(Z: np.ndarray, n: int, T: float, X: float) -> PartitionValue:
    """``Z_n(nT + sqrt(n) X, nT)`` by bilinear interpolation, times the boundary normalisation.

    ``Z`` is an octant table ``Z[p, q]``; points outside the octant count as 0.
    """
    p = n * T + math.sqrt(n) * X
    q = n * T
    p0, q0 = int(math.floor(p + 1e-12)), int(math.floor(q + 1e-12))
    fp, fq = max(0.0, p - p0), max(0.0, q - q0)

    def at(i: int, j: int) -> float:
        if fp == 0.0 and i > p0 or fq == 0.0 and j > q0:
            return 0.0
        if j > i or i >= Z.shape[0] or j >= Z.shape[1]:
            if (i > p0 and fp > 0) or (j > q0 and fq > 0):
                if j > i:
                    return 0.0
            raise DomainError("interpolation stencil leaves the computed table")
        return float(Z[i, j])

    val = ((1 - fp) * (1 - fq) * at(p0, q0) + fp * (1 - fq) * at(p0 + 1, q0)
           + (1 - fp) * fq * at(p0, q0 + 1) + fp * fq * at(p0 + 1, q0 + 1))
    return PartitionValue(val * octant_normalization(n, T, X), "octant", (p, q), n, "boundary_normalized")


# -- quadrant --------------------------------------------------------------------

def _quadrant_setup(ws: KernelWorkspace, L: int, W: int) -> np.ndarray:
    if ws.horizon_max < L:
        raise DomainError("kernel workspace does not cover the walk length")
    return np.ascontiguousarray(ws.up_table(L, 0, L, W)) if L > 0 else np.zeros((0, W))


def _terminal(z0, W: int) -> np.ndarray:
    z = np.asarray(getattr(z0, "values", z0), dtype=float)
    if z.shape[-1] < W:
        raise DomainError(f"terminal data must cover sites 0..{W - 1}")
    return z[..., :W]


def quadrant_partition_batch(ws: KernelWorkspace, omega, z0, x: int, beta: float,
                             core=None) -> np.ndarray:
    """Forward DP for a batch: ``omega`` is ``(R, L, >=W)``, ``z0`` is ``(R, >=W)`` or ``(>=W,)``."""
    core = core or _default_core
    omega = np.asarray(omega, dtype=float)
    R, L = omega.shape[:2]
    W = x + L + 2
    Q = _quadrant_setup(ws, L, W)
    factor = np.ascontiguousarray(1.0 + beta * omega[:, :, :W])
    term = np.ascontiguousarray(np.broadcast_to(_terminal(z0, W), (R, W)))
    return core.fk_forward(int(x), factor, Q, term)


def quadrant_partition_dp(ws: KernelWorkspace, omega, z0, x: int, beta: float,
                          n: int | None = None, core=None) -> PartitionValue:
    """``E_x^L[z0(S_L) prod_{t<L} (1 + beta omega[t, S_t])]`` by forward DP, ``L = omega.shape[0]``."""
    omega = np.asarray(omega, dtype=float)
    v = quadrant_partition_batch(ws, omega[None], np.asarray(getattr(z0, "values", z0))[None],
                                 x, beta, core=core)
    return PartitionValue(float(v[0]), "quadrant", (omega.shape[0], x), n or omega.shape[0] // 2)


def quadrant_value_field(ws: KernelWorkspace, omega, z0, beta: float, W: int | None = None) -> np.ndarray:
    """``V[i, s] = E[z0(S_L) prod_{t=i}^{L-1} (1 + beta omega[t, S_t]) | S_i = s]`` for all ``i``."""
    omega = np.asarray(omega, dtype=float)
    L = omega.shape[0]
    W = W or omega.shape[1]
    Q = _quadrant_setup(ws, L, W + 1)
    V = np.zeros((L + 1, W + 1))
    V[L, :W] = _terminal(z0, W)
    for t in range(L - 1, -1, -1):
        q = Q[t]
        nxt = np.zeros(W + 1)
        nxt[:W] = q[:W] * V[t + 1, 1 : W + 1]
        nxt[1:W] += (1.0 - q[1:W]) * V[t + 1, : W - 1]
        V[t, :W] = nxt[:W] * (1.0 + beta * omega[t, :W])
    return V[:, :W]


def quadrant_partition_enum(omega, z0, x: int, beta: float) -> float:
    """Average over the enumerated uniform path law (walk length ``<= 24``)."""
    omega = np.asarray(omega, dtype=float)
    L = omega.shape[0]
    z = np.asarray(getattr(z0, "values", z0), dtype=float)
    paths = enumerate_path_array(x, L)
    t = np.arange(L)
    prod = np.prod(1.0 + beta * omega[t[None, :], paths[:, :L]], axis=1)
    return float(np.mean(z[paths[:, L]] * prod))


def mild_equation_residual(ws: KernelWorkspace, omega, z0, beta: float, x_max: int | None = None) -> float:
    """Largest violation of the Duhamel identity by the exact value field.

    For every time ``i`` and site ``x``::

        V_i(x) = sum_y cp(L-i, L-i, x, y) z0(y)
                 + beta sum_{j=i}^{L-1} sum_y cp(j-i, L-i, x, y) omega[j, y] W_j(y),

    where ``W_j(y) = sum_y' cp(1, L-j, y, y') V_{j+1}(y')``.
    """
    omega = np.asarray(omega, dtype=float)
    L, width = omega.shape
    V = quadrant_value_field(ws, omega, z0, beta)
    z = _terminal(z0, width)
    x_max = width - L - 2 if x_max is None else x_max
    worst = 0.0
    for i in range(L + 1):
        M = L - i
        Wj = {}
        for j in range(i, L):
            K1 = ws.conditioned_matrix(1, L - j, width - 1, width - 1)
            Wj[j] = K1 @ V[j + 1]
        for x in range(max(0, x_max) + 1):
            first = ws.conditioned_row(M, M, x, width - 1) @ z
            acc = 0.0
            for j in range(i, L):
                row = ws.conditioned_row(j - i, M, x, width - 1)
                acc += row @ (omega[j] * Wj[j])
            scale = max(1.0, abs(V[i, x]))
            worst = max(worst, abs(first + beta * acc - V[i, x]) / scale)
    return worst


# -- chaos expansion -------------------------------------------------------------

def _kernel_cache(ws: KernelWorkspace, L: int, W: int) -> dict:
    cache: dict = {}

    def K(d: int, N: int) -> np.ndarray:
        key = (d, N)
        if key not in cache:
            cache[key] = ws.conditioned_matrix(d, N, W - 1, W - 1)
        return cache[key]

    return K


def chaos_expansion_eval(ws: KernelWorkspace, omega, z0, x: int, beta: float,
                         max_order: int | None = None) -> tuple[float, list[float]]:
    """Sum of the multilinear expansion of the quadrant partition function up to ``max_order``.

    Term ``r`` sums over times ``0 <= i_1 < ... < i_r < L`` and heights the
    product of conditioned kernels between consecutive visits, the weights
    ``beta omega[i_j, x_j]`` and the terminal smoothing of ``z0``.  Computed by
    a DP over (order, time, site); returns ``(total, terms)``.
    """
    omega = np.asarray(omega, dtype=float)
    L = omega.shape[0]
    max_order = L if max_order is None else max_order
    if max_order > L or max_order < 0:
        raise DomainError("max_order must lie in 0..L")
    W = x + L + 1
    z = _terminal(z0, W)
    K = _kernel_cache(ws, L, W)
    # g[i] = sum_y' cp(L-i, L-i, ., y') z0(y')
    g = np.array([K(L - i, L - i) @ z for i in range(L)] + [z])
    terms = [float(g[0][x])]
    A = np.zeros((L, W))
    for i in range(L):
        A[i] = K(i, L)[x] * omega[i, :W]
    for r in range(1, max_order + 1):
        terms.append(beta ** r * float(np.sum(A * g[:L])))
        if r == max_order:
            break
        nxt = np.zeros_like(A)
        for i2 in range(r, L):
            acc = np.zeros(W)
            for i1 in range(r - 1, i2):
                acc += A[i1] @ K(i2 - i1, L - i1)
            nxt[i2] = acc * omega[i2, :W]
        A = nxt
    return float(sum(terms)), terms


def chaos_second_moments(ws: KernelWorkspace, x: int, n: int, k_max: int, a: float = 0.0) -> np.ndarray:
    """``S_k = sum_{0<=i_1<...<i_k<=n} sum_x prod cp^2 e^{a x_k}`` for ``k = 0..k_max``."""
    W = x + n + 1
    K = _kernel_cache(ws, n, W)
    weight = np.exp(a * np.arange(W))
    out = [math.exp(a * x)]
    A = np.zeros((n + 1, W))
    for i in range(n + 1):
        A[i] = K(i, n)[x] ** 2
    for k in range(1, k_max + 1):
        out.append(float(np.sum(A @ weight)))
        if k == k_max:
            break
        nxt = np.zeros_like(A)
        for i2 in range(k, n + 1):
            acc = np.zeros(W)
            for i1 in range(k - 1, i2):
                acc += A[i1] @ (K(i2 - i1, n - i1) ** 2)
            nxt[i2] = acc
        A = nxt
    return np.array(out)


def chaos_moment_envelope(ws: KernelWorkspace, x: int, n: int, k_max: int, a: float = 0.0,
                          K: float = 9.0) -> dict:
    """Fit ``S_k <= B e^{ax + K a^2 n} C^k n^{k/2} / (k/2)!`` and report ``B``, ``C``.

    ``log C`` is the least-squares slope of ``log(S_k (k/2)! / (n^{k/2} pref))``
    against ``k``; ``B`` is then the smallest value making every ``k`` hold.
    """
    S = chaos_second_moments(ws, x, n, k_max, a)
    k = np.arange(k_max + 1)
    pref = math.exp(a * x + K * a * a * n)
    base = np.array([math.lgamma(kk / 2 + 1) for kk in k]) - k / 2 * math.log(max(n, 1))
    y = np.log(np.maximum(S, 1e-300)) + base - math.log(pref)
    logC = float(np.polyfit(k, y, 1)[0]) if k_max >= 1 else 0.0
    B = float(np.exp(y - k * logC).max())
    return {"x": x, "n": n, "a": a, "S": S.tolist(), "C": math.exp(logC), "B": B}


# -- octant-quadrant reduction -------------------------------------------------------

def stopping_time(path, n: int) -> int:
    """First ``t`` with ``t + S_t >= 2n`` (the walk meets the anti-diagonal)."""
    s = np.asarray(path)
    hit = np.flatnonzero(np.arange(s.size) + s >= 2 * n)
    return int(hit[0]) if hit.size else 2 * n


def reduction_pathwise(path, omega, z0, beta: float, n: int) -> float:
    """Full minus stopped functional along one path of length ``2n``.

    Full: ``z0(S_2n) prod_{t=0}^{2n}``; stopped: ``z0(S_T) prod_{t=0}^{T}``.
    """
    s = np.asarray(path)
    z = np.asarray(getattr(z0, "values", z0), dtype=float)
    f = 1.0 + beta * np.asarray(omega)[np.arange(s.size), s]
    T = stopping_time(s, n)
    return float(z[s[-1]] * np.prod(f) - z[s[T]] * np.prod(f[: T + 1]))


def reduction_error(ws: KernelWorkspace, omega, z0, x: int, n: int, beta: float,
                    core=None) -> np.ndarray:
    """Exact ``E_x^{2n}[full] - E_x^{2n}[stopped]`` for a batch of environments.

    ``omega`` has shape ``(R, 2n+1, >=W)`` and ``z0`` ``(R, >=W)``.  Both
    expectations are backward DPs; the stopped one absorbs
    ``z0(s)(1 + beta omega[t, s])`` as soon as ``t + s >= 2n``.
    """
    core = core or _default_core
    omega = np.asarray(omega, dtype=float)
    R = omega.shape[0]
    L = 2 * n
    W = x + L + 2
    Q = _quadrant_setup(ws, L, W)
    z = np.ascontiguousarray(np.broadcast_to(_terminal(z0, W), (R, W)))
    fac = 1.0 + beta * omega[:, :, :W]
    factor = np.ascontiguousarray(fac[:, :L])
    term = np.ascontiguousarray(z * fac[:, L])
    full = core.fk_backward(term, factor, Q, z, None)
    stopped = core.fk_backward(term, factor, Q, z, L)
    return full[:, x] - stopped[:, x]


def octant_reduction_experiment(x: int, n_values: Sequence[int], samples: int, seed: int,
                                workers: int | None = None, bulk: WeightSpec | None = None,
                                boundary: WeightSpec | None = None, core=None,
                                block: int = 256) -> list[dict]:
    """Monte Carlo over environments of ``E|E(x, n)|`` for each ``n``.

    Bulk and boundary weights use disjoint streams; the walk expectation is
    exact (backward DP), so the only randomness is the environment.
    """
    bulk = bulk or WeightSpec("standard_normal")
    boundary = boundary or WeightSpec("standard_normal")
    out = []
    for n in n_values:
        ws = KernelWorkspace(2 * n)
        L = 2 * n
        W = x + L + 2

        def one(stream: RngStream, m: int) -> np.ndarray:
            om = sample_weights(bulk, stream.child(0), (m, L + 1, W))
            zb = sample_weights(boundary, stream.child(1), (m, W))
            z0 = np.cumprod(1.0 + n ** -0.25 * zb, axis=1)
            return reduction_error(ws, om, z0, x, n, n ** -0.25, core=core)

        errs = np.concatenate(map_blocks(one, samples, seed, workers, block, sub=(n,)))
        a = np.abs(errs)
        out.append({"n": n, "mean_abs_error": float(a.mean()),
                    "stderr": float(a.std(ddof=1) / math.sqrt(a.size)), "samples": int(a.size)})
    return out


# -- log-gamma identity ------------------------------------------------------------

def loggamma_samples(n: int, m: int, A: float, variant: int, samples: int, seed: int,
                     workers: int | None = None, stream_tag: int | None = None,
                     core=None, block: int = DEFAULT_BLOCK) -> np.ndarray:
    """Partition functions ``Z(m, m)`` of the log-gamma octant; special region by ``variant``.

    ``variant = 1``: the diagonal ``i = j`` carries the special law;
    ``variant = 2``: the boundary row ``j = 0`` does.
    """
    if variant not in (1, 2):
        raise ConfigError("variant must be 1 or 2")
    bulk, special = loggamma_specs(n, A)
    if special.theta <= 0:
        raise ConfigError("special shape must be positive")
    tags = _octant_tags(m, m, "diagonal" if variant == 1 else "boundary_row")
    shape = np.where(tags == BULK, bulk.theta, special.theta)
    shape = np.where(tags == OUTSIDE, bulk.theta, shape)
    tag = variant if stream_tag is None else stream_tag

    def one(stream: RngStream, r: int) -> np.ndarray:
        g = stream.gamma(np.broadcast_to(shape, (r, m + 1, m + 1)), (r, m + 1, m + 1))
        zeta = np.ascontiguousarray(bulk.scale * (1.0 / g))
        return octant_table(zeta, core=core)[:, m, m]

    return np.concatenate(map_blocks(one, samples, seed, workers, block, sub=(tag,)))


def loggamma_identity_experiment(n: int, T: float | None = None, A: float = 0.0,
                                 samples: int = 100_000, seed: int = 0,
                                 workers: int | None = None, m: int | None = None,
                                 significance: float = 1e-3, z_max: float = 3.0,
                                 self_test: bool = False, core=None) -> TestReport:
    """Two-sample comparison of ``Z^1`` (special diagonal) and ``Z^2`` (special boundary row).

    The endpoint is ``m = floor(nT)`` unless ``m`` is given.  ``self_test``
    compares two independent ``Z^1`` batches instead.
    """
    if m is None:
        if T is None:
            raise ConfigError("give T or m")
        m = int(math.floor(n * T + 1e-9))
    z1 = loggamma_samples(n, m, A, 1, samples, seed, workers, core=core)
    z2 = (loggamma_samples(n, m, A, 1, samples, seed, workers, stream_tag=3, core=core)
          if self_test else loggamma_samples(n, m, A, 2, samples, seed, workers, core=core))
    if np.ptp(z1) == 0 or np.ptp(z2) == 0:
        raise StatisticalError("degenerate sample: all partition values equal")
    ks = ks_two_sample(z1, z2, significance)
    mom = moment_compare(z1, z2, orders=(1, 2), z_max=z_max)
    return TestReport(
        "loggamma_identity" + ("_self" if self_test else ""),
        {"ks_D": ks.statistic, "max_moment_z": mom.statistic},
        ks.passed and mom.passed, p_value=ks.p_value, tolerance=significance,
        sizes=[int(z1.size), int(z2.size)],
        details={"ks": ks.to_dict(), "moments": mom.to_dict(),
                 "mean_1": float(z1.mean()), "mean_2": float(z2.mean())},
        provenance={"n": n, "m": m, "A": A, "seed": seed, "samples": samples})


# -- Hölder moments of the rescaled quadrant field ------------------------------

def holder_moment_audit(n_values: Sequence[int], T: float, X_values: Sequence[float],
                        p: float, samples: int, seed: int, theta: float = 0.9,
                        S: float | None = None, workers: int | None = None,
                        core=None, block: int = 128) -> list[dict]:
    """Monte Carlo ``||Z_n(T,X) - Z_n(T,Y)||_p / |X-Y|^{theta/2}`` and the temporal analogue.

    ``Z_n(T, X)`` is the quadrant value with walk length ``2 floor(nT)``,
    start ``round(sqrt(2n) X)``, ``beta = n^{-1/4}``, standard normal bulk and
    boundary data ``z0`` from an independent standard normal row.  The
    temporal ratio compares ``T`` with ``S`` (default ``T/2``) at each ``X``
    using ``||.||_p / |T-S|^{theta/4}``.
    """
    core = core or _default_core
    S = T / 2 if S is None else S
    rows = []
    for n in n_values:
        LT = 2 * int(math.floor(n * T + 1e-9))
        LS = 2 * int(math.floor(n * S + 1e-9))
        xs = [int(round(math.sqrt(2 * n) * X)) for X in X_values]
        W = max(xs) + LT + 2
        ws = KernelWorkspace(LT)
        QT = _quadrant_setup(ws, LT, W)
        QS = _quadrant_setup(ws, LS, W) if LS > 0 else None
        beta = n ** -0.25

        def one(stream: RngStream, m: int):
            om = stream.child(0).normal((m, LT, W))
            z0 = np.cumprod(1.0 + beta * stream.child(1).normal((m, W)), axis=1)
            z0 = np.ascontiguousarray(z0)
            fT = np.ascontiguousarray(1.0 + beta * om)
            VT = core.fk_backward(z0, fT, QT, z0, None)
            if QS is not None:
                fS = np.ascontiguousarray(fT[:, :LS])
                VS = core.fk_backward(z0, fS, QS, z0, None)
            else:
                VS = z0
            return VT[:, xs], VS[:, xs]

        parts = map_blocks(one, samples, seed, workers, block, sub=(n,))
        VT = np.concatenate([a for a, _ in parts])
        VS = np.concatenate([b for _, b in parts])
        one_point = float(max(np.mean(np.abs(VT[:, i]) ** p) ** (1 / p) for i in range(len(xs))))
        spatial = 0.0
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                d = abs(X_values[i] - X_values[j])
                if d == 0:
                    continue
                num = np.mean(np.abs(VT[:, i] - VT[:, j]) ** p) ** (1 / p)
                spatial = max(spatial, float(num / d ** (theta / 2)))
        temporal = float(max(np.mean(np.abs(VT[:, i] - VS[:, i]) ** p) ** (1 / p)
                             for i in range(len(xs))) / abs(T - S) ** (theta / 4))
        rows.append({"n": n, "p": p, "theta": theta, "one_point": one_point,
                     "spatial": spatial, "temporal": temporal, "samples": samples})
    return rows
