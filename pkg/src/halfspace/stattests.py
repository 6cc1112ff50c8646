"""Statistical verdicts used across the experiments.

Every test returns a :class:`TestReport`; ``passed`` is computed from the
statistic and the thresholds stored in the report and nothing else.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats as _sps

from .errors import DomainError, StatisticalError

__all__ = [
    "TestReport",
    "DEFAULT_SIGNIFICANCE",
    "kolmogorov_sf",
    "ks_statistic",
    "ks_two_sample",
    "ks_one_sample",
    "moment_compare",
    "mean_against",
    "subgaussian_fit",
    "exact_law_distance",
]

DEFAULT_SIGNIFICANCE = 1e-3
KS_TERMS = 100


def _clean(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


@dataclass
class TestReport:
    """Outcome of one named check, with enough provenance to replay it."""

    __test__ = False  # not a pytest class

    name: str
    statistic: Any
    passed: bool
    p_value: float | None = None
    tolerance: float | None = None
    sizes: list[int] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise StatisticalError(f"p-value {self.p_value} outside [0, 1]")
        self.passed = bool(self.passed)

    def to_dict(self) -> dict[str, Any]:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def kolmogorov_sf(lam: float, terms: int = KS_TERMS) -> float:
    """``P(K > lam)`` for the Kolmogorov distribution, ``2 sum (-1)^{j-1} exp(-2 j^2 lam^2)``.

    Arguments below 0.3 return 1 (the alternating series is useless there and
    the true value exceeds ``1 - 1e-8``).
    """
    if lam < 0.3:
        return 1.0
    j = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j * j * lam * lam))
    return float(min(1.0, max(0.0, s)))


def _as_sample(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"sample {name} is empty")
    if np.isnan(arr).any():
        raise StatisticalError(f"sample {name} contains NaN")
    return arr


def ks_statistic(a, b) -> float:
    """Exact sup distance between the two empirical cdfs."""
    a = np.sort(_as_sample(a, "a"))
    b = np.sort(_as_sample(b, "b"))
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(Fa - Fb).max())


def _ks_p(D: float, ne: float) -> float:
    r = math.sqrt(ne)
    return kolmogorov_sf((r + 0.12 + 0.11 / r) * D)


def ks_two_sample(a, b, significance: float = DEFAULT_SIGNIFICANCE,
                  name: str = "ks_two_sample") -> TestReport:
    """Two-sample Kolmogorov-Smirnov test with the effective-size corrected asymptotic p-value."""
    a = _as_sample(a, "a")
    b = _as_sample(b, "b")
    D = ks_statistic(a, b)
    ne = a.size * b.size / (a.size + b.size)
    p = _ks_p(D, ne)
    return TestReport(name, D, p >= significance, p_value=p, tolerance=significance,
                      sizes=[int(a.size), int(b.size)])


def ks_one_sample(a, cdf: Callable[[np.ndarray], np.ndarray],
                  significance: float = DEFAULT_SIGNIFICANCE,
                  name: str = "ks_one_sample") -> TestReport:
    a = np.sort(_as_sample(a, "a"))
    F = cdf(a)
    m = a.size
    D = float(max((np.arange(1, m + 1) / m - F).max(), (F - np.arange(m) / m).max()))
    p = _ks_p(D, m)
    return TestReport(name, D, p >= significance, p_value=p, tolerance=significance, sizes=[m])


def _moment_and_se(x: np.ndarray, order: int) -> tuple[float, float]:
    m = x.size
    if order == 1:
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    if order == 2:
        c = x - x.mean()
        var = float(c @ c / (m - 1)) if m > 1 else 0.0
        m4 = float(np.mean(c ** 4))
        return var, math.sqrt(max(m4 - var * var, 0.0) / m)
    raw = x ** order
    return float(raw.mean()), float(raw.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0


def moment_compare(a, b=None, orders: Sequence[int] = (1, 2), z_max: float = 3.0,
                   target: Sequence[float] | None = None,
                   name: str = "moment_compare") -> TestReport:
    """Pooled-sigma z tests per order: 1 compares means, 2 variances, higher raw moments.

    Pass ``target`` (one exact value per order) instead of a second sample to
    test ``a`` alone against known moments.
    """
    a = _as_sample(a, "a")
    if target is not None:
        target = np.broadcast_to(np.asarray(target, dtype=float), (len(orders),))
    elif b is None:
        raise DomainError("need a second sample or exact targets")
    else:
        b = _as_sample(b, "b")
    deltas, zs, ses = [], [], []
    for i, k in enumerate(orders):
        ma, sa = _moment_and_se(a, k)
        if target is None:
            mb, sb = _moment_and_se(b, k)
        else:
            mb, sb = float(target[i]), 0.0
        se = math.hypot(sa, sb)
        d = ma - mb
        deltas.append(d)
        ses.append(se)
        zs.append(0.0 if d == 0.0 else (math.inf if se == 0.0 else abs(d) / se))
    worst = max(zs)
    sizes = [int(a.size)] + ([] if target is not None else [int(b.size)])
    return TestReport(name, worst, worst <= z_max, tolerance=z_max, sizes=sizes,
                      details={"orders": list(orders), "deltas": deltas, "stderr": ses, "z": zs})


def mean_against(a, target: float, z_max: float = 3.0, name: str = "mean_against") -> TestReport:
    return moment_compare(a, orders=(1,), z_max=z_max, target=[target], name=name)


def subgaussian_fit(u, p_hat, k: float, stderr=None, max_slope: float = -1.0 / 32.0,
                    name: str = "subgaussian_fit") -> TestReport:
    """Least-squares slope of ``log p_hat`` against ``u^2 / k`` with its standard error.

    Points with ``p_hat == 0`` are dropped.  When ``stderr`` is given the fit
    is weighted by the delta-method variance of ``log p_hat``.  Passes when the
    slope does not exceed ``max_slope``.
    """
    u = np.asarray(u, dtype=float)
    p = np.asarray(p_hat, dtype=float)
    keep = p > 0
    if keep.sum() < 2:
        raise StatisticalError("need at least two positive tail estimates")
    xv = u[keep] ** 2 / k
    yv = np.log(p[keep])
    if stderr is None:
        w = np.ones_like(xv)
    else:
        rel = np.asarray(stderr, dtype=float)[keep] / p[keep]
        w = 1.0 / np.maximum(rel, 1e-12) ** 2
    if np.ptp(xv) == 0:
        raise StatisticalError("tail grid is degenerate")
    W = w.sum()
    xm = (w @ xv) / W
    ym = (w @ yv) / W
    sxx = w @ (xv - xm) ** 2
    slope = float((w @ ((xv - xm) * (yv - ym))) / sxx)
    resid = yv - ym - slope * (xv - xm)
    dof = max(1, xv.size - 2)
    if stderr is None:
        se = math.sqrt(float(resid @ resid) / dof / sxx) if xv.size > 2 else 0.0
    else:
        se = math.sqrt(1.0 / sxx)
    return TestReport(name, slope, slope <= max_slope, tolerance=max_slope,
                      sizes=[int(keep.sum())],
                      details={"slope_stderr": se, "intercept": float(ym - slope * xm)})


def exact_law_distance(counts, law, significance: float = DEFAULT_SIGNIFICANCE,
                       tv_max: float | None = None, name: str = "exact_law_distance") -> TestReport:
    """Total-variation distance and chi-square p-value of a histogram against an exact law.

    ``counts`` and ``law`` are aligned arrays over the same cells.  Cells of
    zero probability that received counts make the p-value 0.
    """
    counts = np.asarray(counts, dtype=float)
    law = np.asarray(law, dtype=float)
    if counts.shape != law.shape:
        raise DomainError("histogram and law must be aligned")
    N = counts.sum()
    if N <= 0:
        raise DomainError("empty histogram")
    phat = counts / N
    tv = 0.5 * float(np.abs(phat - law).sum())
    support = law > 0
    if np.any(counts[~support] > 0):
        p = 0.0
        chi2 = math.inf
    else:
        e = N * law[support]
        chi2 = float(((counts[support] - e) ** 2 / e).sum())
        df = int(support.sum()) - 1
        p = float(_sps.chi2.sf(chi2, df)) if df > 0 else 1.0
    ok = p >= significance and (tv_max is None or tv <= tv_max)
    return TestReport(name, tv, ok, p_value=p, tolerance=tv_max, sizes=[int(N)],
                      details={"chi2": chi2, "cells": int(law.size)})
