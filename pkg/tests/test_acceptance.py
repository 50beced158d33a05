"""Acceptance gate: the ten end-to-end checks, full-size where it matters.

Each check prints one `ACCEPTANCE n: PASS|FAIL - ...` line (run pytest with -s
to see them as a checklist) and then asserts.  The 128^3 grid and the long
Picard run live here and nowhere else in the suite, so this module dominates
the total runtime; everything else is unit-sized.
"""
import contextlib
import math
import subprocess
import sys
import time
from types import SimpleNamespace

import numpy as np
from scipy.integrate import quad

from decaylab import (DecaySeries, GridSpec, NormProbe, PicardConfig,
                      RadialProfile, certify_time_integral, contraction_ratio,
                      critical_log_dichotomy, expected_heat_slope,
                      fit_decay_exponent, grad_heat_kernel, heat_kernel,
                      heat_potential, heat_series, kernel_envelope_report,
                      load_budgets, make_slow_decay_field, oseen_tensor,
                      picard_run, pointwise_envelope_oracle, radial_lq_norm,
                      sample_to_grid, smallness_response)
from decaylab.analysis import convolution_scaling_check, convolution_sweep
from decaylab.kernels import oseen_envelope_report
from decaylab.oracle import radial_probe_grid
from decaylab.picard import x_weights
from decaylab.representation import representation_report, whole_space_check

FULL_SPEC = GridSpec(half_width=256.0, resolution=128)


@contextlib.contextmanager
def scored(num, desc):
    """Print the verdict line even when the body raises, then assert."""
    out = SimpleNamespace(ok=False, note="")
    try:
        yield out
    except BaseException as exc:
        print(f"\nACCEPTANCE {num}: FAIL - {desc} [crashed: {exc!r}]",
              flush=True)
        raise
    suffix = f" [{out.note}]" if out.note else ""
    verdict = "PASS" if out.ok else "FAIL"
    print(f"\nACCEPTANCE {num}: {verdict} - {desc}{suffix}", flush=True)
    assert out.ok, f"acceptance check {num} failed: {desc}{suffix}"


def late_decade_trend(times, values):
    """Log-log slope over the last decade of the probe range."""
    t = np.asarray(times, dtype=float)
    v = np.maximum(np.asarray(values, dtype=float), 1e-300)
    keep = t >= t[-1] / 10.0
    return float(np.polyfit(np.log(t[keep]), np.log(v[keep]), 1)[0])


def test_01_heat_decay_slopes():
    pairs = [(1.0, math.inf), (2.0, math.inf), (2.0, 3.0), (2.5, 2.0),
             (3.0, math.inf)]
    with scored(1, "heat-flow L^q slopes match -a/2 + 3/(2q) within 0.05") as out:
        ok, notes = True, []
        for a, q in pairs:
            start = time.monotonic()
            form = "smooth-power" if a == 3.0 else "matched-power"
            profile = RadialProfile(alpha=a, form=form)
            times = np.geomspace(1.0, 1000.0, 25)
            values = np.array([
                radial_lq_norm(profile.amplitude, q, float(t),
                               radii=radial_probe_grid(t, n=240))
                for t in times])
            fit = fit_decay_exponent(
                DecaySeries(times, values), (10.0, 1000.0),
                log_corrected=(a == 3.0 and math.isinf(q)))
            elapsed = time.monotonic() - start
            predicted = expected_heat_slope(a, q)
            ok &= abs(fit.slope - predicted) <= 0.05 and elapsed <= 120.0
            notes.append(f"a={a:g},q={q:g}: {fit.slope:+.3f}/{predicted:+.3f}"
                         f" {elapsed:.0f}s")
        out.ok, out.note = ok, "; ".join(notes)


def test_02_critical_log_dichotomy():
    with scored(2, "critical tail: raw sup grows, log-compensated sup is "
                   "decade-stable out to t=1e6") as out:
        dich = critical_log_dichotomy(times=np.geomspace(1e2, 1e6, 25))
        out.ok = (dich.growth_trend > 0.05
                  and abs(dich.stability_trend) <= 0.02)
        out.note = (f"growth {dich.growth_trend:.3f}, "
                    f"stability {dich.stability_trend:+.4f}")


def test_03_gradient_decay_slopes():
    with scored(3, "gradient L^3 slopes on the 128^3 grid within 0.07") as out:
        ok, notes = True, []
        for a, q in ((1.0, 3.0), (2.0, 3.0)):
            start = time.monotonic()
            sampled = sample_to_grid(
                make_slow_decay_field(RadialProfile(alpha=a)), FULL_SPEC)
            times = np.geomspace(5.0, 1000.0, 25)
            probe = NormProbe(q=q, trunc_radius=0.8 * FULL_SPEC.half_width)
            _, values = heat_series(sampled, times, probe, gradient=True)
            fit = fit_decay_exponent(DecaySeries(times, values),
                                     (10.0, 1000.0))
            elapsed = time.monotonic() - start
            predicted = -0.5 - a / 2.0 + 1.5 / q
            ok &= abs(fit.slope - predicted) <= 0.07 and elapsed <= 600.0
            notes.append(f"a={a:g}: {fit.slope:+.3f}/{predicted:+.3f}"
                         f" {elapsed:.0f}s")
        out.ok, out.note = ok, "; ".join(notes)


def test_04_pointwise_envelopes():
    with scored(4, "pointwise envelopes hold for a=1,2 and weakened a=3; "
                   "the strict a=3 envelope is rejected") as out:
        pass_reports = [
            pointwise_envelope_oracle(RadialProfile(alpha=1.0)),
            pointwise_envelope_oracle(RadialProfile(alpha=2.0)),
            pointwise_envelope_oracle(RadialProfile(alpha=3.0), delta=0.1)]
        control = pointwise_envelope_oracle(RadialProfile(alpha=3.0),
                                            delta=0.0)
        out.ok = all(r.passed for r in pass_reports) and not control.passed
        out.note = ("ratios " + ", ".join(f"{r.sup_ratio:.2f}"
                                          for r in pass_reports)
                    + f"; control trend {control.trend:+.3f}")


def test_05_picard_full_grid():
    budgets = load_budgets()["picard"]
    m0 = budgets["m0_threshold_full"] / 2.0
    config = PicardConfig(alpha=1.0, q=4.0, m0=m0, spec=FULL_SPEC,
                          t_max=100.0, max_iter=8, conv_tol=1e-3)
    with scored(5, "nonlinear iteration at half threshold: contraction, "
                   "bounded stable channels, L^inf slope -0.5") as out:
        start = time.monotonic()
        result = picard_run(config)
        elapsed = time.monotonic() - start

        report = result.final_report
        series = DecaySeries(np.asarray(report.times[1:]),
                             np.asarray(report.series["linf"][1:]))
        fit = fit_decay_exponent(series, (2.0, 100.0))

        weights = x_weights(report.times, config.alpha, config.q,
                            config.log_power)
        channel_trends = {
            ch: late_decade_trend(report.times[1:],
                                  (weights[ch] * report.series[ch])[1:])
            for ch in ("lq", "linf", "grad_l3")}
        x_budget = budgets["x_norm_per_m0"] * m0

        out.ok = (result.converged and not result.diverged
                  and bool(result.ratios)
                  and all(r <= 0.5 for r in result.ratios)
                  and result.iterations <= 8
                  and abs(fit.slope + 0.5) <= 0.07
                  and report.x_norm <= x_budget
                  and all(tr <= 0.1 for tr in channel_trends.values())
                  and elapsed <= 1800.0)
        out.note = (f"{result.iterations} iters, rho {contraction_ratio(result):.3f}, "
                    f"slope {fit.slope:+.3f}, X {report.x_norm:.1f}/{x_budget:.1f}, "
                    f"trends " + ",".join(f"{tr:+.3f}"
                                          for tr in channel_trends.values())
                    + f", {elapsed:.0f}s")


def test_06_quadratic_smallness():
    budgets = load_budgets()["picard"]
    config = PicardConfig(alpha=1.0, q=4.0,
                          m0=budgets["m0_threshold_quick"] / 4.0,
                          spec=GridSpec(half_width=40.0, resolution=64),
                          t_max=16.0, max_iter=2, conv_tol=1e-12)
    with scored(6, "halving the data amplitude cuts the nonlinear correction "
                   "about fourfold") as out:
        big, lit, ratio = smallness_response(config)
        out.ok = 3.0 <= ratio <= 5.0
        out.note = f"correction {big:.3g} vs {lit:.3g}, ratio {ratio:.2f}"


def test_07_kernel_suite():
    with scored(7, "closed-form kernel identities and decay envelopes") as out:
        start = time.monotonic()
        points = [(np.array([1.2, -0.4, 0.7]), 0.8),
                  (np.array([0.05, 0.02, -0.03]), 2.0),
                  # deep tail but representable: at t = 0.1 this point has
                  # Gamma ~ 1e-107, beneath the trace's cancellation floor,
                  # and no double-precision route could certify 1e-6 there
                  (np.array([8.0, -3.0, 5.0]), 2.0),
                  (np.array([0.3, 0.9, -1.1]), 0.03)]

        mass, _ = quad(lambda r: 4.0 * np.pi * r * r
                       * heat_kernel(np.array([r, 0.0, 0.0]), 0.7),
                       0.0, np.inf)
        mass_ok = abs(mass - 1.0) <= 1e-8

        trace_ok = all(
            abs(np.trace(heat_potential(x, t, order=2)) - heat_kernel(x, t))
            <= 1e-6 * heat_kernel(x, t) for x, t in points)

        div_ok = True
        for x, t in points:
            g1 = oseen_tensor(x, t, order=1)
            div = np.einsum("ijj->i", g1)
            div_ok &= np.abs(div).max() <= 1e-6 * np.abs(g1).max()

        scaling_ok = True
        for lam in (0.3, 2.0, 7.5):
            for x, t in points:
                left = heat_kernel(x * np.sqrt(lam), t * lam)
                right = lam ** -1.5 * heat_kernel(x, t)
                scaling_ok &= abs(left - right) <= 1e-12 * abs(right)
                gleft = grad_heat_kernel(x * np.sqrt(lam), t * lam)
                gright = lam ** -2.0 * grad_heat_kernel(x, t)
                scaling_ok &= np.abs(gleft - gright).max() \
                    <= 1e-12 * np.abs(gright).max()

        reports = kernel_envelope_report() + oseen_envelope_report()
        envelopes_ok = all(r.passed for r in reports)
        elapsed = time.monotonic() - start

        out.ok = (mass_ok and trace_ok and div_ok and scaling_ok
                  and envelopes_ok and elapsed <= 60.0)
        out.note = (f"mass err {abs(mass - 1.0):.1e}, "
                    f"{len(reports)} envelopes, {elapsed:.0f}s")


def test_08_inequality_certifications():
    with scored(8, "time-integral regimes and convolution tail bounds "
                   "certified") as out:
        start = time.monotonic()
        regimes = [certify_time_integral(2.0, 1.0),
                   certify_time_integral(1.0, 1.0),
                   certify_time_integral(1.0, 3.0),
                   certify_time_integral(0.75, 1.0),
                   certify_time_integral(0.75, 3.0)]
        sweep = convolution_sweep()
        measured, predicted, rel = convolution_scaling_check()
        elapsed = time.monotonic() - start
        out.ok = (all(r.passed for r in regimes) and sweep.passed
                  and rel <= 0.2 and elapsed <= 300.0)
        out.note = (f"sweep ratio {sweep.sup_ratio:.2f}, scaling "
                    f"{measured:.3f}/{predicted:.3f}, {elapsed:.0f}s")


def test_09_representation_identity():
    with scored(9, "shell representation residual <= 1e-2; degenerate cutoff "
                   "<= 1e-6") as out:
        rep = representation_report()
        degenerate = whole_space_check()
        out.ok = rep.max_residual <= 1e-2 and degenerate <= 1e-6
        out.note = (f"shell {rep.max_residual:.2e}, "
                    f"whole-space {degenerate:.2e}")


def test_10_cli_determinism(tmp_path):
    with scored(10, "two decay-lab all runs agree byte-for-byte") as out:
        contents, codes = [], []
        for tag in ("first", "second"):
            outdir = tmp_path / tag
            proc = subprocess.run(
                [sys.executable, "-m", "decaylab.cli", "all",
                 f"--out={outdir}"],
                capture_output=True, text=True, timeout=900)
            codes.append(proc.returncode)
            summary = outdir / "summary.tsv"
            contents.append(summary.read_bytes() if summary.exists() else b"")
        out.ok = (codes == [0, 0] and contents[0] == contents[1]
                  and len(contents[0]) > 0)
        out.note = (f"exit codes {codes}, "
                    f"{len(contents[0])} bytes"
                    + ("" if contents[0] == contents[1] else ", DIFFER"))
