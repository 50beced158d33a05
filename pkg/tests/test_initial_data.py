import numpy as np
import pytest
from scipy.integrate import quad

from decaylab.grid import GridSpec
from decaylab.initial_data import (InitialField, RadialProfile, effective_m0,
                                   make_slow_decay_field, sample_to_grid)


class TestRadialProfile:
    def test_smooth_power_values(self):
        prof = RadialProfile(alpha=2.0, m0=3.0)
        assert prof.amplitude(0.0) == pytest.approx(3.0)
        r = 50.0
        assert prof.amplitude(r) == pytest.approx(3.0 * (1 + r * r) ** -1.0,
                                                  rel=1e-14)

    def test_alpha_range_enforced(self):
        with pytest.raises(ValueError):
            RadialProfile(alpha=0.0)
        with pytest.raises(ValueError):
            RadialProfile(alpha=3.5)
        with pytest.raises(ValueError):
            RadialProfile(alpha=2.0, m0=-1.0)

    def test_matched_power_is_exact_outside_cap(self):
        prof = RadialProfile(alpha=2.5, form="matched-power")
        r = np.array([1.5, 4.0, 90.0])
        assert prof.amplitude(r) == pytest.approx(r ** -2.5, rel=1e-14)

    def test_matched_power_c1_at_seam(self):
        prof = RadialProfile(alpha=1.5, form="matched-power")
        h = 1e-6
        left = (prof.amplitude(1.0) - prof.amplitude(1.0 - h)) / h
        right = (prof.amplitude(1.0 + h) - prof.amplitude(1.0)) / h
        assert left == pytest.approx(right, rel=1e-4)
        assert prof.amplitude(1.0 - 1e-12) == pytest.approx(
            prof.amplitude(1.0 + 1e-12), rel=1e-9)

    def test_matched_power_zero_mass_defect(self):
        # the cap carries exactly the mass of the power law it replaces
        prof = RadialProfile(alpha=2.0, form="matched-power")
        defect, _ = quad(lambda s: s * s * (prof.amplitude(s) - s ** -2.0),
                         0.0, 1.0, points=[0.5], limit=200)
        assert abs(defect) < 1e-12

    def test_matched_power_critical_alpha_rejected(self):
        with pytest.raises(ValueError):
            RadialProfile(alpha=3.0, form="matched-power")


class TestInitialField:
    def test_velocity_is_azimuthal(self):
        field = make_slow_decay_field(RadialProfile(alpha=2.0))
        pts = np.array([[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]])
        u = field(pts)
        # u = g(rho) (x2, -x1, 0), so u . x = 0 and u3 = 0
        assert np.abs(np.einsum("pi,pi->p", u, pts)).max() < 1e-14
        assert np.abs(u[:, 2]).max() == 0.0

    def test_swirl_amplitude_decay(self):
        field = make_slow_decay_field(RadialProfile(alpha=2.0, m0=2.0))
        r = 100.0
        # g ~ m0 r^{-(1+alpha)} far out so |u| ~ m0 r^{-alpha}
        assert field.swirl_amplitude(r) * r == pytest.approx(2.0 * r ** -2.0,
                                                             rel=1e-3)

    def test_curl_consistency(self):
        # u must equal curl(f e3) = (d2 f, -d1 f, 0)
        field = make_slow_decay_field(RadialProfile(alpha=1.0, m0=1.5))
        x = np.array([0.8, -0.4, 1.2])
        h = 1e-6

        def f_at(p):
            return field.vector_potential_amplitude(np.linalg.norm(p))

        fd = np.array([
            f_at(x + [0.0, h, 0.0]) - f_at(x - [0.0, h, 0.0]),
            -(f_at(x + [h, 0.0, 0.0]) - f_at(x - [h, 0.0, 0.0])),
            0.0]) / (2.0 * h)
        assert field(x[None])[0] == pytest.approx(fd, rel=1e-6, abs=1e-12)

    def test_pointwise_divergence_free(self):
        field = make_slow_decay_field(RadialProfile(alpha=2.0))
        h = 1e-6
        for x in (np.array([1.0, 0.3, -0.8]), np.array([-2.0, 1.5, 0.2])):
            div = 0.0
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                div += (field((x + e)[None])[0, i]
                        - field((x - e)[None])[0, i]) / (2.0 * h)
            assert abs(div) < 1e-8

    def test_requires_smooth_form(self):
        with pytest.raises(ValueError):
            InitialField(RadialProfile(alpha=2.0, form="matched-power"))

    def test_effective_m0_frozen(self):
        field = make_slow_decay_field(RadialProfile(alpha=2.0))
        assert effective_m0(field) == pytest.approx(1.6163981708558166,
                                                    rel=1e-9)
        field1 = make_slow_decay_field(RadialProfile(alpha=1.0))
        assert effective_m0(field1) == pytest.approx(1.207093086096893,
                                                     rel=1e-9)

    def test_effective_m0_scales_linearly(self):
        one = effective_m0(make_slow_decay_field(RadialProfile(alpha=2.0)))
        three = effective_m0(make_slow_decay_field(RadialProfile(alpha=2.0,
                                                                 m0=3.0)))
        assert three == pytest.approx(3.0 * one, rel=1e-12)


class TestSampleToGrid:
    def test_interior_exact_and_window_annuls_boundary(self, small_spec):
        field = make_slow_decay_field(RadialProfile(alpha=2.0))
        fld = sample_to_grid(field, small_spec)
        ax = small_spec.axis()
        # interior point: window = 1 there
        i = np.searchsorted(ax, 3.0)
        x = np.array([ax[i], ax[i], ax[i]])
        assert np.linalg.norm(x) < 0.8 * small_spec.half_width
        expect = field(x[None])[0]
        assert fld.data[:, i, i, i] == pytest.approx(expect, rel=1e-14)
        # corner: window = 0 outside the sphere of radius L
        assert fld.data[:, 0, 0, 0] == pytest.approx(np.zeros(3), abs=0.0)

    def test_window_radius_recorded(self, small_spec):
        field = make_slow_decay_field(RadialProfile(alpha=2.0))
        fld = sample_to_grid(field, small_spec)
        assert fld.window_radius == pytest.approx(0.8 * small_spec.half_width)
        assert fld.time == 0.0
