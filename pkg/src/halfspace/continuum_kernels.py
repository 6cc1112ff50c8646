"""Continuum kernels for Brownian motion killed or conditioned at the wall.

``P_t``          whole-line heat kernel ``exp(-X^2/2t) / sqrt(2 pi t)``
``P_t^Dir``      Dirichlet kernel ``P_t(X - Y) - P_t(X + Y)``
``h(T, X)``      ``2 Phi(X / sqrt T) - 1``, the probability a Brownian motion from
                 ``X`` stays positive for time ``T``
``M_t^T(X, Y)``  meander kernel ``P_t^Dir(X, Y) h(T - t, Y) / h(T, X)`` with its
                 ``X = 0`` limit and the terminal case ``t = T``

The module also holds the rescaled discrete kernel used to check the
discrete-to-continuum limit and quadrature audits for the integral bounds
that the chaos solver relies on.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .discrete_kernels import BoundAuditReport, KernelWorkspace
from .errors import ConfigError, DomainError, NumericalError, RangeError

__all__ = [
    "SQRT_2_OVER_PI",
    "MeanderKernelParams",
    "normal_cdf",
    "heat_kernel",
    "dirichlet_kernel",
    "dirichlet_cell_mass",
    "two_phi_minus_one",
    "survival_probability",
    "meander_kernel",
    "simpson",
    "integrate",
    "scaled_discrete_kernel",
    "discrete_mass",
    "sup_error",
    "lp_error",
    "quadrature_bound_audit",
    "kernel_grid_csv",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
SMALL_ARG = 1e-4


def normal_cdf(x):
    """Standard normal cdf (Cephes rational approximations via ``scipy.special.ndtr``)."""
    return special.ndtr(x)


def heat_kernel(t: float, X):
    if t <= 0:
        raise DomainError("t must be positive")
    X = np.asarray(X, dtype=float)
    return np.exp(-X * X / (2 * t)) / math.sqrt(2 * math.pi * t)


def dirichlet_kernel(t: float, X, Y):
    """``P_t(X - Y) - P_t(X + Y)`` written as ``P_t(X - Y) (1 - exp(-2XY/t))``.

    The factored form keeps full relative accuracy when ``XY << t``.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    d = X - Y
    return np.exp(-d * d / (2 * t)) * -np.expm1(-2 * X * Y / t) / math.sqrt(2 * math.pi * t)


def dirichlet_cell_mass(t: float, X, lo, hi):
    """``int_lo^hi P_t^Dir(X, Y) dY`` in closed form."""
    if t <= 0:
        raise DomainError("t must be positive")
    s = math.sqrt(t)
    X = np.asarray(X, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    direct = special.ndtr((hi - X) / s) - special.ndtr((lo - X) / s)
    image = special.ndtr((hi + X) / s) - special.ndtr((lo + X) / s)
    return direct - image


def two_phi_minus_one(eps):
    """``2 Phi(eps) - 1`` without cancellation.

    For ``eps < 1e-4`` the odd series ``sqrt(2/pi)(eps - eps^3/6 + eps^5/40)``
    is used; elsewhere ``erf(eps / sqrt 2)``, which is accurate near zero too.
    """
    eps = np.asarray(eps, dtype=float)
    series = SQRT_2_OVER_PI * eps * (1.0 - eps * eps / 6.0 + eps ** 4 / 40.0)
    return np.where(np.abs(eps) < SMALL_ARG, series, special.erf(eps / math.sqrt(2.0)))


def survival_probability(T: float, X):
    """``h(T, X) = 2 Phi(X / sqrt T) - 1``; ``h(0, X) = 1`` for ``X > 0``."""
    X = np.asarray(X, dtype=float)
    if T < 0:
        raise DomainError("T must be non-negative")
    if T == 0:
        return np.where(X > 0, 1.0, 0.0)
    return two_phi_minus_one(X / math.sqrt(T))


@dataclass(frozen=True)
class MeanderKernelParams:
    t: float
    T: float
    X: float
    step: float | None = None
    cutoff: float | None = None

    def __post_init__(self) -> None:
        if self.t <= 0 or self.t > self.T:
            raise DomainError("need 0 < t <= T")
        if self.X < 0:
            raise DomainError("X must be non-negative")
        if self.cutoff is not None and self.cutoff < self.X + 10 * math.sqrt(self.T):
            raise DomainError("quadrature cutoff must reach X + 10 sqrt(T)")

    @property
    def y_cutoff(self) -> float:
        return self.cutoff if self.cutoff is not None else self.X + 10 * math.sqrt(self.T)


def meander_kernel(t: float, T: float, X: float, Y):
    """Density of ``B_t`` for Brownian motion from ``X`` conditioned positive on ``[0, T]``.

    ``t == T`` selects the terminal branch by exact comparison.  ``X == 0``
    selects the meander branch; for ``0 < X < 1e-4 sqrt(T)`` the denominator
    ``h(T, X)`` comes from its series, which matches the ``X = 0`` branch to
    first order.
    """
    if t > T:
        raise DomainError("elapsed time exceeds horizon")
    if t <= 0:
        raise DomainError("t must be positive")
    if X < 0:
        raise DomainError("X must be non-negative")
    Y = np.asarray(Y, dtype=float)
    terminal = t == T
    if X == 0:
        if terminal:
            out = (Y / T) * np.exp(-Y * Y / (2 * T))
        else:
            out = (Y * math.sqrt(T / t ** 3) * np.exp(-Y * Y / (2 * t))
                   * survival_probability(T - t, Y))
        return np.where(Y >= 0, out, 0.0)
    num = dirichlet_kernel(t, X, Y)
    if not terminal:
        num = num * survival_probability(T - t, Y)
    out = num / survival_probability(T, X)
    return np.where(Y >= 0, out, 0.0)


# -- quadrature ------------------------------------------------------------------

def simpson(values: np.ndarray, h: float) -> float:
    """Composite Simpson rule on an odd number of equally spaced samples."""
    v = np.asarray(values, dtype=float)
    m = v.shape[-1]
    if m < 3 or m % 2 == 0:
        raise DomainError("Simpson needs an odd number (>= 3) of samples")
    return float(h / 3.0 * (v[..., 0] + v[..., -1] + 4.0 * v[..., 1:-1:2].sum(-1)
                            + 2.0 * v[..., 2:-1:2].sum(-1)))


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              tol: float = 1e-10, start: int = 256, max_level: int = 12) -> float:
    """Simpson quadrature of ``f`` on ``[lo, hi]``, doubling until successive results agree to ``tol``."""
    m = start
    prev = None
    for _ in range(max_level):
        y = np.linspace(lo, hi, 2 * m + 1)
        val = simpson(f(y), (hi - lo) / (2 * m))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        m *= 2
    raise NumericalError(
        f"Simpson on [{lo}, {hi}] did not settle: last two values {prev!r}, {val!r}")


# -- discrete-to-continuum ---------------------------------------------------

def _even_site(n: int, X) -> np.ndarray:
    return 2 * np.floor(math.sqrt(n) * np.asarray(X, dtype=float) / math.sqrt(2.0) + 1e-12).astype(np.int64)


def scaled_discrete_kernel(ws: KernelWorkspace, n: int, t: float, T: float, X: float, Y):
    """``(n/2)^{1/2} cp(2 floor(tn), 2 floor(Tn), 2 floor(sqrt(n) X / sqrt 2), 2 floor(sqrt(n) Y / sqrt 2))``."""
    if t > T:
        raise DomainError("elapsed time exceeds horizon")
    steps = 2 * math.floor(t * n + 1e-9)
    horizon = 2 * math.floor(T * n + 1e-9)
    if horizon > ws.horizon_max:
        raise RangeError(f"need workspace horizon {horizon}, have {ws.horizon_max}")
    x = int(_even_site(n, X))
    y = _even_site(n, Y)
    row = ws.conditioned_row(steps, horizon, x, int(y.max(initial=0)))
    return math.sqrt(n / 2.0) * row[y]


def discrete_mass(ws: KernelWorkspace, n: int, t: float, T: float, X: float) -> float:
    """Riemann sum of the rescaled kernel over the even lattice (cell width ``sqrt(2/n)``)."""
    steps = 2 * math.floor(t * n + 1e-9)
    horizon = 2 * math.floor(T * n + 1e-9)
    x = int(_even_site(n, X))
    row = ws.conditioned_row(steps, horizon, x, x + steps)
    return float(math.sqrt(n / 2.0) * row[::2].sum() * math.sqrt(2.0 / n))


def sup_error(ws: KernelWorkspace, n: int, t: float, T: float, X: float,
              y_grid: Sequence[float]) -> float:
    y = np.asarray(y_grid, dtype=float)
    return float(np.abs(scaled_discrete_kernel(ws, n, t, T, X, y) - meander_kernel(t, T, X, y)).max())


def lp_error(ws: KernelWorkspace, n: int, t: float, T: float, X: float,
             p: float, a: float, y_max: float | None = None, sub: int = 16) -> float:
    """``int |P_n - M_t^T|^p e^{aY} dY`` with the step function integrated cell by cell."""
    y_max = X + 10 * math.sqrt(T) if y_max is None else y_max
    w = math.sqrt(2.0 / n)
    cells = int(math.ceil(y_max / w))
    left = np.arange(cells) * w
    val = scaled_discrete_kernel(ws, n, t, T, X, left + 0.5 * w)
    frac = np.linspace(0.0, 1.0, 2 * sub + 1)
    Y = left[:, None] + w * frac[None, :]
    cont = meander_kernel(t, T, X, Y)
    integrand = np.abs(val[:, None] - cont) ** p * np.exp(a * Y)
    h = w / (2 * sub)
    per_cell = h / 3.0 * (integrand[:, 0] + integrand[:, -1] + 4 * integrand[:, 1:-1:2].sum(1)
                          + 2 * integrand[:, 2:-1:2].sum(1))
    return float(per_cell.sum())


# -- quadrature audits ---------------------------------------------------------

def _lhs(which: str, t: float, T: float, X: float, a: float, Y: float | None = None,
         s: float | None = None) -> float:
    cut = max(X, Y or 0.0) + 12 * math.sqrt(T) + 2.0 * a * T + 1.0
    # resolve the narrow kernel at small t
    start = max(256, int(8 * cut / math.sqrt(min(t, s or t))))
    if which == "easy":
        return integrate(lambda z: meander_kernel(t, T, X, z) * np.exp(a * z), 0.0, cut, start=start)
    if which == "dik":
        return integrate(lambda z: meander_kernel(t, T, X, z) ** 2 * np.exp(a * z), 0.0, cut, start=start)
    if which == "spat":
        if X == Y:
            return 0.0
        return integrate(lambda z: (meander_kernel(t, T, X, z) - meander_kernel(t, T, Y, z)) ** 2
                         * np.exp(a * z), 0.0, cut, start=start)
    if which == "tem":
        return integrate(lambda z: (meander_kernel(s, T - t + s, X, z) - meander_kernel(t, T, X, z)) ** 2
                         * np.exp(a * z), 0.0, cut, start=start)
    raise ConfigError(f"unknown quadrature bound {which!r}")


def quadrature_bound_audit(which: str, grid: dict | None = None) -> BoundAuditReport:
    """Implied constants for the four integral bounds on the meander kernels.

    ``easy``: ``int M e^{aZ} <= C e^{aX}``; ``dik``: ``int M^2 e^{aZ} <= C t^{-1/2} e^{aX}``;
    ``spat``: ``int (M(X,.) - M(Y,.))^2 e^{aZ} <= C t^{-1/2} e^{a(X+Y)} |X - Y|``;
    ``tem``: ``int (M_s^{T-t+s} - M_t^T)^2 e^{aZ} <= C s^{-1/2} e^{2aX} |t - s|^{1/2}``.
    """
    if which not in ("easy", "dik", "spat", "tem"):
        raise ConfigError(f"unknown quadrature bound {which!r}")
    grid = dict(grid or {})
    ts = grid.get("t_values", [0.01, 0.05, 0.25, 0.5, 1.0])
    Ts = grid.get("T_values", [1.0])
    Xs = grid.get("X_values", [0.0, 0.1, 0.5, 1.0, 2.0])
    As = grid.get("a_values", [0.0, 1.0])
    start = time.perf_counter()
    worst, where = -math.inf, {}
    for T in Ts:
        for t in ts:
            if t > T:
                continue
            for a in As:
                for i, X in enumerate(Xs):
                    if which == "easy":
                        cases = [(_lhs("easy", t, T, X, a) / math.exp(a * X), {})]
                    elif which == "dik":
                        cases = [(_lhs("dik", t, T, X, a) / (t ** -0.5 * math.exp(a * X)), {})]
                    elif which == "spat":
                        cases = [(_lhs("spat", t, T, X, a, Y=Y)
                                  / (t ** -0.5 * math.exp(a * (X + Y)) * abs(X - Y)), {"Y": Y})
                                 for Y in Xs[i + 1 :]]
                    else:
                        cases = [(_lhs("tem", t, T, X, a, s=s)
                                  / (s ** -0.5 * math.exp(2 * a * X) * (t - s) ** 0.5), {"s": s})
                                 for s in ts if s < t]
                    for r, extra in cases:
                        if r > worst:
                            worst, where = r, {"t": t, "T": T, "X": X, "a": a, **extra}
    if not math.isfinite(worst):
        raise NumericalError(f"quadrature audit {which} produced no finite ratio")
    return BoundAuditReport(which, grid, worst, where, round((time.perf_counter() - start) * 1e3, 3))


def kernel_grid_csv(t: float, T: float, X: float, Y: Sequence[float]) -> str:
    vals = meander_kernel(t, T, X, np.asarray(Y, dtype=float))
    lines = ["t,T,X,Y,value"]
    lines += [f"{t!r},{T!r},{X!r},{y!r},{v!r}" for y, v in zip(map(float, Y), vals.tolist())]
    return "\n".join(lines) + "\n"
