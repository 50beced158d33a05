"""Certified inequalities: scalar time integrals, the power-tail convolution
bound, and heat-flow envelopes with the critical-case log correction.

Everything here reduces a claimed inequality to a sup-ratio over probes plus
a top-decade trend (see reports).  The heat-flow checks lean on the radial
quadrature oracle, so they are independent of the spectral grid machinery
they later certify.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .budgets import load_budgets
from .initial_data import RadialProfile
from .oracle import radial_heat_value, radial_lq_norm
from .reports import (BoundReport, DecaySeries, ExponentFit,
                      fit_decay_exponent, log_growth_trend, top_decade_trend)

# exponent padding for the critical-case time integral.  The padded ratio
# behaves like t^-delta ln(t), whose local slope is -delta + 1/ln(t); delta
# must beat 1/ln(t_max) ~ 0.07 at the 1e6 horizon or the trend check reads
# the leftover log as growth.  0.1 clears it, with the looser tolerance below
# absorbing the slow crossover.
TIME_INTEGRAL_DELTA = 0.1
TIME_INTEGRAL_LOG_TREND_TOL = 0.03

_QUAD = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


# -- scalar time integrals ---------------------------------------------------

def certify_time_integral(a: float, alpha: float, times=None) -> BoundReport:
    """J(t) = int_0^t (1+tau)^-a ln^d(2+tau) dtau against its claimed envelope,
    d = 1 in the critical case alpha = 3 and 0 otherwise.

    Regimes: a > 1 bounded; a = 1 grows like ln (ln^2 with the extra log);
    a < 1 grows like t^(1-a) (t^(1-a+delta) with the extra log).
    """
    if a <= 0:
        raise ValueError("a must be positive")
    log_power = 1.0 if alpha == 3.0 else 0.0
    if times is None:
        times = np.geomspace(1.0, 1e6, 49)
    times = np.asarray(times, dtype=float)

    def integrand(tau):
        return (1.0 + tau) ** -a * math.log(2.0 + tau) ** log_power

    values = np.empty_like(times)
    total = 0.0
    prev = 0.0
    for i, t in enumerate(times):
        seg, _ = quad(integrand, prev, t, **_QUAD)
        total += seg
        values[i] = total
        prev = t

    trend_tol = 0.02
    if a > 1.0:
        label, claim = "a-gt-1", "J(t) <= c"
        envelope = np.ones_like(times)
        key = "a_gt_1"
    elif a == 1.0:
        if log_power:
            label, claim = "a-eq-1-log2", "J(t) <= c ln^2(2+t)"
            envelope = np.log(2.0 + times) ** 2
            key = "a_eq_1_log2"
        else:
            label, claim = "a-eq-1", "J(t) <= c ln(2+t)"
            envelope = np.log(2.0 + times)
            key = "a_eq_1"
    else:
        if log_power:
            d = TIME_INTEGRAL_DELTA
            label, claim = "a-lt-1-log", f"J(t) <= c (1+t)^(1-a+{d:g})"
            envelope = (1.0 + times) ** (1.0 - a + d)
            key = "a_lt_1_log"
            trend_tol = TIME_INTEGRAL_LOG_TREND_TOL
        else:
            label, claim = "a-lt-1", "J(t) <= c (1+t)^(1-a)"
            envelope = (1.0 + times) ** (1.0 - a)
            key = "a_lt_1"

    budget = load_budgets()["time_integral"][key]
    rep = BoundReport.evaluate(check=f"time-integral-{label}", claim=claim,
                               scale=times, ratio=values / envelope,
                               budget=budget, trend_tol=trend_tol)
    rep.detail.update(a=a, log_power=log_power, t_max=float(times[-1]),
                      final_integral=float(values[-1]))
    return rep


# -- convolution of two power tails ------------------------------------------

def convolution_integral(A: float, B: float, a: float, b: float,
                         R: float) -> float:
    """int over R^3 of (|y|+A)^-a (|x-y|+B)^-b dy at |x| = R.

    Azimuthal symmetry collapses the angular integral in closed form:
    with F'(w) = w (w+B)^-b, the integral is
    (2 pi / R) int_0^inf s (s+A)^-a [F(s+R) - F(|s-R|)] ds.
    """
    if not b > 3.0 > a > 0.0:
        raise ValueError("need b > 3 > a > 0")

    def F(w):
        return (w + B) ** (2.0 - b) / (2.0 - b) + B * (w + B) ** (1.0 - b) / (b - 1.0)

    def integrand(s):
        return s * (s + A) ** -a * (F(s + R) - F(abs(s - R)))

    lo, _ = quad(integrand, 0.0, R, **_QUAD)
    hi, _ = quad(integrand, R, np.inf, **_QUAD)
    return 2.0 * np.pi / R * (lo + hi)


def certify_convolution_bound(a: float, b: float, A: float = 1.0,
                              B: float = 1.0, probes=None) -> BoundReport:
    """sup over probe radii of integral * |x|^a B^(b-3), claimed bounded for
    |x| >= 2A."""
    if not b > 3.0 > a > 0.0:
        raise ValueError("need b > 3 > a > 0")
    if probes is None:
        # the ratio saturates like c (1 - O((A+B)/|x|)); the far probes put
        # the trend fit past that transient
        probes = A * np.array([2.0, 5.0, 10.0, 30.0, 100.0, 300.0, 1e3, 3e3])
    probes = np.asarray(probes, dtype=float)
    if np.min(probes) < 2.0 * A:
        raise ValueError("probes must satisfy |x| >= 2A")
    vals = np.array([convolution_integral(A, B, a, b, R) for R in probes])
    ratio = vals * probes ** a * B ** (b - 3.0)
    rep = BoundReport.evaluate(
        check="convolution-tail-bound",
        claim="integral <= c |x|^-a B^(3-b)",
        scale=probes, ratio=ratio,
        budget=load_budgets()["convolution"]["sup"])
    rep.detail.update(a=a, b=b, A=A, B=B)
    return rep


def convolution_sweep(a_values=None, b_values=None, B_values=None,
                      A: float = 1.0, probes=None) -> BoundReport:
    """The tail bound across a parameter grid, one aggregated report."""
    if a_values is None:
        a_values = (0.5, 1.0, 1.5, 2.0, 2.5)
    if b_values is None:
        b_values = (3.5, 4.0, 4.5, 5.0, 6.0)
    if B_values is None:
        B_values = (0.5, 1.0, 2.0, 4.0, 8.0)
    if probes is None:
        # far enough out that even the soft b -> 3 tails have saturated
        probes = A * np.array([2.0, 10.0, 100.0, 1e3, 1e4, 1e5])
    probes = np.asarray(probes, dtype=float)
    scales, ratios = [], []
    worst = (0.0, None)
    for a in a_values:
        for b in b_values:
            for B in B_values:
                vals = np.array([convolution_integral(A, B, a, b, R)
                                 for R in probes])
                ratio = vals * probes ** a * B ** (b - 3.0)
                scales.append(probes)
                ratios.append(ratio)
                peak = float(ratio.max())
                if peak > worst[0]:
                    worst = (peak, (a, b, B))
    rep = BoundReport.evaluate(
        check="convolution-tail-bound-sweep",
        claim="integral <= c |x|^-a B^(3-b) across the parameter grid",
        scale=np.concatenate(scales), ratio=np.concatenate(ratios),
        budget=load_budgets()["convolution"]["sup"])
    rep.detail.update(grid=(len(a_values), len(b_values), len(B_values)),
                      worst_ratio=worst[0], worst_params=worst[1])
    return rep


def convolution_scaling_check(a: float = 2.0, b: float = 4.0, A: float = 1.0,
                              R: float = 20.0, B: float = 1.0,
                              factor: float = 2.0):
    """Scaling the second tail width by `factor` should scale the integral by
    factor^(3-b); returns (measured, predicted, relative error)."""
    base = convolution_integral(A, B, a, b, R)
    wide = convolution_integral(A, factor * B, a, b, R)
    measured = wide / base
    predicted = factor ** (3.0 - b)
    return measured, predicted, abs(measured / predicted - 1.0)


# -- heat-flow envelopes ------------------------------------------------------

@dataclass
class HeatEnvelopeResult:
    """Space-time envelope certification for a radial heat flow, plus the
    temporal slope of its sup-in-x norm and the two critical-case growth
    trends (with and without the log compensation)."""

    report: BoundReport
    fit: ExponentFit
    growth_trend_raw: float
    growth_trend_compensated: float


def verify_heat_envelope(profile: RadialProfile, radii=None, times=None,
                         exponent_shift: float = 0.0) -> HeatEnvelopeResult:
    """V(r,t) against (1+r+sqrt(t))^-alpha, with ln(2+r+sqrt(t)) allowed on
    top in the critical case alpha = 3.

    exponent_shift stiffens the claimed envelope; the +0.25 negative control
    must fail through the growth trend.
    """
    alpha = profile.alpha
    log_power = 1.0 if alpha == 3.0 else 0.0
    if radii is None:
        radii = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 25)])
    if times is None:
        times = np.concatenate([[0.0], np.geomspace(1e-2, 1e4, 25)])
    radii = np.asarray(radii, dtype=float)
    times = np.asarray(times, dtype=float)

    V = np.empty((times.size, radii.size))
    for i, t in enumerate(times):
        for j, r in enumerate(radii):
            V[i, j] = radial_heat_value(profile.amplitude, float(r), float(t))

    arg = 1.0 + radii[None, :] + np.sqrt(times[:, None])
    bare = np.abs(V) * arg ** (alpha + exponent_shift)
    compensated = bare / np.log(1.0 + arg) ** log_power
    sup_bare = bare.max(axis=1)
    sup_comp = compensated.max(axis=1)

    budget = load_budgets()["heat_envelope"][f"alpha_{alpha:g}"]
    rep = BoundReport.evaluate(
        check=f"heat-envelope-alpha-{alpha:g}",
        claim="|V| <= c (1+r+sqrt(t))^-alpha"
              + (" ln(2+r+sqrt(t))" if log_power else ""),
        scale=times, ratio=sup_comp, budget=budget)
    rep.detail.update(alpha=alpha, exponent_shift=exponent_shift,
                      n_radii=radii.size, n_times=times.size)

    pos = times > 0
    fit = fit_decay_exponent(
        DecaySeries(times[pos], V[pos].max(axis=1), label="sup-in-x"),
        window=(10.0, float(times.max())), log_corrected=bool(log_power))
    return HeatEnvelopeResult(
        report=rep, fit=fit,
        growth_trend_raw=log_growth_trend(times, sup_bare),
        growth_trend_compensated=log_growth_trend(times, sup_comp))


def heat_norm_decay(profile: RadialProfile, q: float, times=None,
                    window=(10.0, 1000.0), log_corrected=None):
    """L^q norm of the radial heat flow over a time grid, with its fitted
    decay exponent; the expected slope is -(alpha/2 - 3/(2q))."""
    if times is None:
        times = np.geomspace(1.0, window[1], 25)
    times = np.asarray(times, dtype=float)
    if log_corrected is None:
        log_corrected = profile.alpha == 3.0 and math.isinf(q)
    values = np.array([radial_lq_norm(profile.amplitude, q, float(t))
                       for t in times])
    series = DecaySeries(times, values,
                         label=f"Lq-heat-decay-alpha-{profile.alpha:g}-q-{q:g}")
    fit = fit_decay_exponent(series, window, log_corrected=log_corrected)
    return series, fit


def expected_heat_slope(alpha: float, q: float) -> float:
    return -(alpha / 2.0 - (0.0 if math.isinf(q) else 3.0 / (2.0 * q)))


@dataclass
class CriticalDichotomy:
    """The alpha = 3 sup-norm ratio with and without the log compensation."""

    times: np.ndarray
    raw_ratio: np.ndarray            # ||V(t)||_inf * t^(3/2)
    compensated_ratio: np.ndarray    # same over ln(2+t)
    growth_trend: float              # slope of ln(raw) vs ln ln t, ~1 if log is real
    stability_trend: float           # top-decade trend of the compensated ratio


def critical_log_dichotomy(profile: RadialProfile | None = None,
                           times=None) -> CriticalDichotomy:
    if profile is None:
        profile = RadialProfile(alpha=3.0)
    if profile.alpha != 3.0:
        raise ValueError("the dichotomy lives at alpha = 3")
    if times is None:
        times = np.geomspace(1e2, 1e6, 25)
    times = np.asarray(times, dtype=float)
    sup = np.array([radial_lq_norm(profile.amplitude, np.inf, float(t))
                    for t in times])
    raw = sup * times ** 1.5
    comp = raw / np.log(2.0 + times)
    return CriticalDichotomy(
        times=times, raw_ratio=raw, compensated_ratio=comp,
        growth_trend=log_growth_trend(times, raw),
        stability_trend=top_decade_trend(times, comp))


# -- pointwise envelopes ------------------------------------------------------

def _pointwise_exponent(alpha: float, delta: float) -> float:
    return alpha - (delta if alpha > 2.0 else 0.0)


def pointwise_envelope_oracle(profile: RadialProfile, delta: float = 0.1,
                              radii=None, times=None,
                              exponent_shift: float = 0.0) -> BoundReport:
    """|V(r,t)| (1+r+sqrt(t))^(alpha - delta [alpha>2]) bounded over the whole
    (r, t) quadrant, trend taken along the joint argument 1+r+sqrt(t).

    The probe grid must reach comparably far in r and sqrt(t): the delta = 0
    variant at alpha = 3 fails through the core ray r << sqrt(t), where the
    flow carries a genuine ln(2+sqrt(t)) on top of the claimed power, and a
    radius-only trend would never see it.
    """
    alpha = profile.alpha
    expo = _pointwise_exponent(alpha, delta) + exponent_shift
    if radii is None:
        radii = np.geomspace(1e-1, 1e5, 33)
    if times is None:
        # sqrt(t) out to 1e9, for two reasons: the concession exponent
        # delta = 0.1 only beats the residual 1/ln(s) slope of the critical
        # core past s ~ 1e6, and the radii cap must sit well below the top
        # decade of s or the (1 + r/sqrt(t))^3 spread of each fixed-t row
        # across bins tilts the fitted trend
        times = np.concatenate([[0.0], np.geomspace(1e-2, 1e18, 33)])
    radii = np.asarray(radii, dtype=float)
    times = np.asarray(times, dtype=float)
    scale = np.empty((radii.size, times.size))
    ratio = np.empty_like(scale)
    for j, r in enumerate(radii):
        for i, t in enumerate(times):
            arg = 1.0 + r + math.sqrt(t)
            scale[j, i] = arg
            ratio[j, i] = abs(radial_heat_value(profile.amplitude, float(r),
                                                float(t))) * arg ** expo
    if alpha > 2.0 and delta > 0.0:
        key = f"alpha_{alpha:g}_delta_{delta:g}"
    else:
        key = f"alpha_{alpha:g}"
    # deliberate-failure variants have no frozen budget; they fail on trend
    budget = load_budgets()["pointwise_envelope"].get(key, np.inf)
    rep = BoundReport.evaluate(
        check=f"pointwise-envelope-alpha-{alpha:g}-delta-{delta:g}",
        claim=f"|V| <= c (1+r+sqrt(t))^-{expo:g}",
        scale=scale, ratio=ratio, budget=budget)
    rep.detail.update(alpha=alpha, delta=delta, exponent=expo,
                      exponent_shift=exponent_shift,
                      n_radii=radii.size, n_times=times.size)
    return rep


def envelope_of_trajectory(traj, alpha: float, delta: float = 0.0) -> BoundReport:
    """Same envelope measured on grid trajectory nodes inside the windowed
    ball; trend taken along the node times."""
    expo = _pointwise_exponent(alpha, delta)
    spec = traj.spec
    r = spec.radius()
    mask = r <= 0.8 * spec.half_width
    rm = r[mask]
    ts, ratios = [], []
    for fld in traj.fields:
        w = (1.0 + rm + math.sqrt(fld.time)) ** expo
        ratios.append(float(np.max(fld.magnitude()[mask] * w)))
        ts.append(fld.time)
    key = f"alpha_{alpha:g}"
    budget = load_budgets()["pointwise_envelope"].get(key, np.inf)
    rep = BoundReport.evaluate(
        check=f"pointwise-envelope-trajectory-alpha-{alpha:g}",
        claim=f"|u| <= c (1+|x|+sqrt(t))^-{expo:g}",
        scale=np.asarray(ts), ratio=np.asarray(ratios), budget=budget)
    rep.detail.update(alpha=alpha, delta=delta, nodes=len(ts))
    return rep
