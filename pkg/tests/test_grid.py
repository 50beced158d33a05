import json
import struct

import numpy as np
import pytest

from decaylab.grid import (GridField, GridSpec, read_field, scalar_field,
                           taper_window, write_field)


class TestGridSpec:
    def test_rejects_bad_resolution(self):
        with pytest.raises(ValueError):
            GridSpec(half_width=16.0, resolution=48)
        with pytest.raises(ValueError):
            GridSpec(half_width=16.0, resolution=16)

    def test_rejects_small_box(self):
        with pytest.raises(ValueError):
            GridSpec(half_width=4.0, resolution=32)

    def test_geometry(self):
        spec = GridSpec(half_width=16.0, resolution=32)
        assert spec.spacing == pytest.approx(1.0)
        ax = spec.axis()
        assert len(ax) == 32
        assert ax[0] == pytest.approx(-16.0)
        assert np.diff(ax) == pytest.approx(np.ones(31))
        r = spec.radius()
        assert r.shape == (32, 32, 32)
        assert r.min() == pytest.approx(0.0)


class TestTaperWindow:
    def test_plateau_and_support(self):
        r = np.array([0.0, 5.0, 12.79, 12.81, 14.4, 15.99, 16.0, 20.0])
        w = taper_window(r, 16.0)
        assert np.all(w[:3] == 1.0)
        assert np.all((w[3:6] > 0) & (w[3:6] < 1))
        assert np.all(w[6:] == 0.0)
        assert np.all(np.diff(w) <= 1e-15)


class TestGridField:
    def test_magnitude_and_rms(self, small_field):
        mag = small_field.magnitude()
        direct = np.sqrt(np.sum(small_field.data ** 2, axis=0))
        assert mag == pytest.approx(direct)
        assert small_field.rms() == pytest.approx(
            float(np.sqrt(np.mean(small_field.data ** 2))))

    def test_with_data_keeps_metadata(self, small_field):
        other = small_field.with_data(small_field.data * 2.0, time=1.5)
        assert other.time == 1.5
        assert other.window_radius == small_field.window_radius
        assert other.spec == small_field.spec

    def test_shape_validated(self, small_spec):
        with pytest.raises(ValueError):
            GridField(small_spec, np.zeros((3, 8, 8, 8)), time=0.0,
                      window_radius=10.0)


class TestFieldFormat:
    def test_roundtrip_exact(self, small_field, tmp_path):
        path = tmp_path / "field.dclf"
        write_field(small_field, str(path))
        back = read_field(str(path))
        assert np.array_equal(back.data, small_field.data)
        assert back.spec == small_field.spec
        assert back.time == small_field.time
        assert back.window_radius == small_field.window_radius

    def test_header_layout(self, small_field, tmp_path):
        path = tmp_path / "field.dclf"
        write_field(small_field, str(path))
        raw = path.read_bytes()
        magic, version, n, length, t, wr = struct.unpack_from("<4sIIddd", raw)
        assert magic == b"DCLF"
        assert version == 1
        assert n == small_field.spec.resolution
        assert length == pytest.approx(small_field.spec.half_width)
        assert t == small_field.time
        assert wr == small_field.window_radius
        header = struct.calcsize("<4sIIddd")
        assert len(raw) == header + 3 * n ** 3 * 8

    def test_payload_is_x_fastest(self, small_spec, tmp_path):
        n = small_spec.resolution
        data = np.zeros((3, n, n, n))
        # data[c, ix, iy, iz]: tag each index so the stream order is visible
        ix, iy, iz = np.meshgrid(np.arange(n), np.arange(n), np.arange(n),
                                 indexing="ij")
        data[0] = ix + 1000.0 * iy + 1000000.0 * iz
        fld = GridField(small_spec, data, time=0.0, window_radius=12.8)
        path = tmp_path / "field.dclf"
        write_field(fld, str(path))
        header = struct.calcsize("<4sIIddd")
        flat = np.frombuffer(path.read_bytes()[header:], dtype="<f8")
        first = flat[:n]
        # x varies fastest: the first n doubles walk ix at iy = iz = 0
        assert first == pytest.approx(np.arange(n, dtype=float))
        assert flat[n] == pytest.approx(1000.0)

    def test_sidecar_json(self, small_field, tmp_path):
        path = tmp_path / "field.dclf"
        write_field(small_field, str(path))
        side = json.loads((tmp_path / "field.dclf.json").read_text())
        assert side["N"] == small_field.spec.resolution
        assert side["L"] == pytest.approx(small_field.spec.half_width)

    def test_scalar_field_helper(self, small_spec):
        fld = scalar_field(small_spec, np.exp(-small_spec.radius() ** 2))
        n = small_spec.resolution
        assert fld.data.shape == (3, n, n, n)
        center = n // 2
        assert fld.data[0, center, center, center] == pytest.approx(1.0)
        assert np.all(fld.data[1:] == 0.0)
