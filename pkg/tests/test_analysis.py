import math

import numpy as np
import pytest

from decaylab.analysis import (certify_convolution_bound, certify_time_integral,
                               convolution_integral, convolution_scaling_check,
                               convolution_sweep, critical_log_dichotomy,
                               envelope_of_trajectory, expected_heat_slope,
                               heat_norm_decay, pointwise_envelope_oracle,
                               verify_heat_envelope)
from decaylab.grid import GridField
from decaylab.initial_data import RadialProfile
from decaylab.picard import Trajectory


class TestTimeIntegral:
    def test_supercritical_exponent_bounded(self):
        rep = certify_time_integral(2.0, alpha=1.0)
        assert rep.passed
        # J(inf) = 1 exactly for a = 2
        assert rep.detail["final_integral"] == pytest.approx(1.0, rel=1e-3)
        assert 0.9 <= rep.sup_ratio <= 1.01

    def test_borderline_exponent_log(self):
        rep = certify_time_integral(1.0, alpha=1.0)
        assert rep.passed
        assert 0.9 <= rep.sup_ratio <= 1.01

    def test_borderline_exponent_log_squared(self):
        rep = certify_time_integral(1.0, alpha=3.0)
        assert rep.passed
        assert 0.45 <= rep.sup_ratio <= 0.75
        assert rep.detail["log_power"] == 1.0

    def test_subcritical_exponent_power_growth(self):
        rep = certify_time_integral(0.75, alpha=1.0)
        assert rep.passed
        # the sharp constant is 1/(1-a) = 4, approached from below
        assert 3.5 <= rep.sup_ratio <= 4.05

    def test_subcritical_with_log_padding(self):
        rep = certify_time_integral(0.75, alpha=3.0)
        assert rep.passed

    def test_rejects_nonpositive_exponent(self):
        with pytest.raises(ValueError):
            certify_time_integral(0.0, alpha=1.0)


class TestConvolution:
    def test_limit_of_vanishing_first_exponent(self):
        # as a -> 0 the first factor drops out and the integral tends to the
        # full mass of the second tail: 4 pi B^(3-b) * 2/((b-1)(b-2)(b-3))
        got = convolution_integral(1.0, 1.0, 1e-9, 4.0, 5.0)
        assert got == pytest.approx(4.0 * np.pi / 3.0, rel=1e-5)
        got = convolution_integral(1.0, 2.0, 1e-9, 5.0, 7.0)
        expect = 4.0 * np.pi * 2.0 ** -2.0 * 2.0 / (4.0 * 3.0 * 2.0)
        assert got == pytest.approx(expect, rel=1e-5)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            convolution_integral(1.0, 1.0, 3.5, 4.0, 5.0)
        with pytest.raises(ValueError):
            convolution_integral(1.0, 1.0, 1.0, 2.5, 5.0)
        with pytest.raises(ValueError):
            certify_convolution_bound(2.0, 4.0, probes=np.array([1.5]))

    def test_certified_at_default_parameters(self):
        rep = certify_convolution_bound(2.0, 4.0)
        assert rep.passed
        assert 3.0 < rep.sup_ratio < 6.0

    def test_sweep_aggregates_worst_case(self):
        rep = convolution_sweep(a_values=(0.5, 2.5), b_values=(3.5, 6.0),
                                B_values=(0.5, 8.0))
        assert rep.passed
        assert rep.detail["grid"] == (2, 2, 2)
        assert rep.detail["worst_ratio"] == pytest.approx(rep.sup_ratio)
        assert len(rep.detail["worst_params"]) == 3

    def test_second_tail_width_scaling(self):
        measured, predicted, rel = convolution_scaling_check()
        assert predicted == pytest.approx(0.5)
        assert rel < 0.1


class TestHeatEnvelope:
    def test_subcritical_envelope_certified(self):
        result = verify_heat_envelope(RadialProfile(alpha=1.0))
        assert result.report.passed
        assert result.fit.slope == pytest.approx(-0.5, abs=0.05)
        assert abs(result.growth_trend_raw) < 0.05

    def test_stiffened_envelope_fails(self):
        # +0.25 on the exponent makes the claim false; the growth trend in
        # the ratio is what catches it
        result = verify_heat_envelope(RadialProfile(alpha=1.0),
                                      exponent_shift=0.25)
        assert not result.report.passed
        assert result.report.trend > 0.02

    def test_critical_envelope_needs_log(self):
        result = verify_heat_envelope(RadialProfile(alpha=3.0))
        assert result.report.passed
        # raw ratio grows like the log, compensated one flattens out
        assert result.growth_trend_raw > 0.3
        assert abs(result.growth_trend_compensated) < 0.3
        assert result.growth_trend_raw > \
            result.growth_trend_compensated + 0.3

    def test_norm_decay_slope(self):
        series, fit = heat_norm_decay(RadialProfile(alpha=2.0), q=3.0,
                                      times=np.geomspace(1.0, 1000.0, 13))
        assert fit.slope == pytest.approx(-0.5, abs=0.05)
        assert np.all(np.diff(series.value) < 0)

    def test_expected_slope_arithmetic(self):
        assert expected_heat_slope(1.0, np.inf) == pytest.approx(-0.5)
        assert expected_heat_slope(2.0, np.inf) == pytest.approx(-1.0)
        assert expected_heat_slope(2.0, 3.0) == pytest.approx(-0.5)
        assert expected_heat_slope(3.0, 3.0) == pytest.approx(-1.0)
        assert expected_heat_slope(3.0, np.inf) == pytest.approx(-1.5)


class TestCriticalDichotomy:
    def test_log_growth_detected(self):
        dich = critical_log_dichotomy(times=np.geomspace(1e2, 1e4, 13))
        assert dich.raw_ratio[-1] > dich.raw_ratio[0]
        assert dich.growth_trend > 0.3
        assert abs(dich.stability_trend) <= 0.05

    def test_requires_critical_alpha(self):
        with pytest.raises(ValueError):
            critical_log_dichotomy(RadialProfile(alpha=2.0))


class TestPointwiseEnvelope:
    RADII = np.geomspace(1e-1, 1e4, 17)
    TIMES = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 11)])

    def test_subcritical_alpha(self):
        rep = pointwise_envelope_oracle(RadialProfile(alpha=1.0),
                                        radii=self.RADII, times=self.TIMES)
        assert rep.passed

    def test_middle_alpha(self):
        rep = pointwise_envelope_oracle(RadialProfile(alpha=2.0),
                                        radii=self.RADII, times=self.TIMES)
        assert rep.passed
        # no delta concession below alpha = 2
        assert rep.detail["exponent"] == pytest.approx(2.0)

    def test_critical_alpha_with_concession(self):
        rep = pointwise_envelope_oracle(RadialProfile(alpha=3.0), delta=0.1)
        assert rep.passed
        assert rep.detail["exponent"] == pytest.approx(2.9)

    def test_critical_alpha_without_concession_fails(self):
        # the spatial envelope at the critical exponent hides a genuine log;
        # claiming the pure power must fail
        rep = pointwise_envelope_oracle(RadialProfile(alpha=3.0), delta=0.0)
        assert not rep.passed
        assert rep.trend > 0.02

    def test_trajectory_variant(self, small_spec):
        # synthetic nodes saturating the claimed envelope exactly
        n = small_spec.resolution
        r = small_spec.radius()
        fields, times = [], [0.0, 1.0, 4.0]
        for t in times:
            data = np.zeros((3, n, n, n))
            data[0] = (1.0 + r + math.sqrt(t)) ** -1.0
            fields.append(GridField(small_spec, data, time=t,
                                    window_radius=12.8))
        rep = envelope_of_trajectory(Trajectory(np.asarray(times), fields),
                                     alpha=1.0)
        assert rep.passed
        assert rep.sup_ratio == pytest.approx(1.0, rel=1e-12)
