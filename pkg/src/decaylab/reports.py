"""Shared report containers and log-log trend utilities.

Every certification in this package reduces to the same two questions about a
ratio measured on a probe grid: is its supremum below a frozen budget, and does
it stop growing across the largest probed decade.  The helpers here answer both
and are reused by the kernel, envelope, and inequality checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Growth slopes below this are treated as flat when certifying boundedness.
DEFAULT_TREND_TOL = 0.02


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares slope of log(value) against log(t)."""

    slope: float
    intercept: float
    residual_rms: float
    window: tuple[float, float]
    n_points: int
    log_corrected: bool = False


@dataclass
class DecaySeries:
    """A decay curve: positive values sampled on a positive abscissa grid."""

    t: np.ndarray
    value: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        if self.t.shape != self.value.shape:
            raise ValueError("t and value must have matching shapes")
        if self.t.ndim != 1:
            raise ValueError("series must be one dimensional")
        if np.any(self.t <= 0):
            raise ValueError("abscissa must be strictly positive")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("abscissa must be strictly increasing")
        if np.any(self.value <= 0):
            raise ValueError("series values must be positive")


@dataclass
class BoundReport:
    """Outcome of a sup-ratio certification against an envelope."""

    check: str
    claim: str
    sup_ratio: float
    budget: float
    trend: float
    trend_tol: float = DEFAULT_TREND_TOL
    two_sided: bool = False
    n_probes: int = 0
    passed: bool = False
    detail: dict = field(default_factory=dict)

    @staticmethod
    def evaluate(check: str, claim: str, scale: np.ndarray, ratio: np.ndarray,
                 budget: float, trend_tol: float = DEFAULT_TREND_TOL,
                 two_sided: bool = False) -> "BoundReport":
        """Certify ratio(scale) <= budget with a flat top decade.

        scale is the envelope's natural argument (radius, time, or |x|+sqrt(t));
        the trend is the log-log slope over the largest decade of scale.  With
        two_sided=False only growth fails the trend test: a ratio decaying
        below its envelope still certifies the bound.
        """
        scale = np.asarray(scale, dtype=float).ravel()
        ratio = np.asarray(ratio, dtype=float).ravel()
        sup = float(np.max(ratio))
        tr = top_decade_trend(scale, ratio)
        ok_trend = (abs(tr) <= trend_tol) if two_sided else (tr <= trend_tol)
        rep = BoundReport(check=check, claim=claim, sup_ratio=sup,
                          budget=float(budget), trend=tr, trend_tol=trend_tol,
                          two_sided=two_sided, n_probes=scale.size,
                          passed=bool(sup <= budget and ok_trend))
        return rep

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "claim": self.claim,
            "sup_ratio": self.sup_ratio,
            "budget": self.budget,
            "trend": self.trend,
            "trend_tol": self.trend_tol,
            "two_sided": self.two_sided,
            "n_probes": self.n_probes,
            "pass": self.passed,
            "detail": self.detail,
        }


def log_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept and residual rms of ln(y) regressed on ln(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def top_decade_trend(scale: np.ndarray, ratio: np.ndarray) -> float:
    """Log-log slope of the per-bin maxima over the largest decade of scale.

    Probes are bucketed logarithmically so 2-D probe grids (radius x time)
    collapse onto the envelope argument before fitting.
    """
    scale = np.asarray(scale, dtype=float).ravel()
    ratio = np.asarray(ratio, dtype=float).ravel()
    pos = scale > 0
    scale, ratio = scale[pos], ratio[pos]
    if scale.size < 2:
        return 0.0
    smax = scale.max()
    lo = smax / 10.0
    sel = scale >= lo
    if np.unique(scale[sel]).size < 3:
        # fall back to the top half of the probed range
        sel = scale >= np.median(scale)
    s, r = scale[sel], ratio[sel]
    # bin to per-scale maxima so repeated scales (sweeps in the other
    # variable) do not flatten the fit artificially
    edges = np.geomspace(s.min() * 0.999, s.max() * 1.001, 9)
    centers, peak = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        m = (s >= a) & (s < b)
        if np.any(m):
            centers.append(np.sqrt(a * b))
            peak.append(r[m].max())
    if len(centers) < 2:
        return 0.0
    slope, _, _ = log_slope(np.array(centers), np.array(peak))
    return slope


def log_growth_trend(scale: np.ndarray, ratio: np.ndarray) -> float:
    """Slope of ln(ratio) against ln(ln(2+scale)) over the top decade of scale.

    Discriminates logarithmic growth from boundedness: a ratio ~ ln(t) scores
    about 1, a bounded one about 0.  The ordinary log-log trend cannot tell
    these apart at reachable scales (d ln(ln t)/d ln t is already ~0.07 at
    t = 1e6), so the critical-case growth checks fit against ln ln instead.
    """
    scale = np.asarray(scale, dtype=float).ravel()
    ratio = np.asarray(ratio, dtype=float).ravel()
    pos = (scale > 0) & (ratio > 0)
    scale, ratio = scale[pos], ratio[pos]
    if scale.size < 3:
        return 0.0
    sel = scale >= scale.max() / 10.0
    if np.count_nonzero(sel) < 3:
        sel = scale >= np.median(scale)
    slope, _, _ = log_slope(np.log(2.0 + scale[sel]), ratio[sel])
    return slope


def fit_decay_exponent(series: DecaySeries, window: tuple[float, float],
                       log_corrected: bool = False) -> ExponentFit:
    """Fit ln(value) (optionally ln(value / ln(2+t))) against ln(t).

    Requires at least 6 points spanning at least a decade inside the window;
    anything thinner makes the slope meaningless for rate checks.
    """
    lo, hi = window
    sel = (series.t >= lo) & (series.t <= hi)
    t, v = series.t[sel], series.value[sel]
    if t.size < 6:
        raise ValueError(f"only {t.size} points inside window {window}; need >= 6")
    if np.log10(t.max() / t.min()) < 1.0:
        raise ValueError("window spans less than a decade")
    if np.any(v <= 0):
        raise ValueError("decay series must be positive inside the fit window")
    y = v / np.log(2.0 + t) if log_corrected else v
    slope, intercept, rms = log_slope(t, y)
    return ExponentFit(slope=slope, intercept=intercept, residual_rms=rms,
                       window=(float(lo), float(hi)), n_points=int(t.size),
                       log_corrected=log_corrected)
