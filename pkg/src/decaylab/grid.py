"""Periodic-box discretization of R^3 and the field container.

A box [-L, L)^3 with N nodes per axis, origin at index N/2.  Fields carry
three components; scalars ride in component 0 with the others zero.

File format (extension-agnostic, magic "DCLF"):
  header  little-endian  4s magic, u32 version, u32 N, f64 L, f64 time,
          f64 window_radius
  payload 3 * N^3 little-endian f64, x-fastest within each component
A JSON sidecar (same path + ".json") carries the free-form metadata.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

_MAGIC = b"DCLF"
_VERSION = 1
_HEADER = struct.Struct("<4sIIddd")


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    resolution: int

    def __post_init__(self):
        n = self.resolution
        if n < 32 or n & (n - 1):
            raise ValueError("resolution must be a power of two, at least 32")
        if self.half_width < 16:
            raise ValueError("half_width must be at least 16")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.resolution

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.resolution)

    def radius(self) -> np.ndarray:
        ax = self.axis()
        x2 = ax * ax
        return np.sqrt(x2[:, None, None] + x2[None, :, None] + x2[None, None, :])


def taper_window(r, half_width: float):
    """1 for r <= 0.8 L, cosine ramp down to 0 at r = L, 0 beyond."""
    r = np.asarray(r, dtype=float)
    inner = 0.8 * half_width
    ramp = 0.5 * (1.0 + np.cos(np.pi * (r - inner) / (0.2 * half_width)))
    return np.where(r <= inner, 1.0, np.where(r >= half_width, 0.0, ramp))


@dataclass
class GridField:
    spec: GridSpec
    data: np.ndarray                    # (3, N, N, N) float64
    time: float = 0.0
    window_radius: float = 0.0          # 0 means unwindowed
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.spec.resolution
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (3, n, n, n):
            raise ValueError(f"data must have shape (3, {n}, {n}, {n})")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains non-finite values")

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.data * self.data, axis=0))

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.data * self.data)))

    def with_data(self, data, time=None, **meta) -> "GridField":
        return GridField(spec=self.spec, data=data,
                         time=self.time if time is None else time,
                         window_radius=self.window_radius,
                         meta={**self.meta, **meta})


def scalar_field(spec: GridSpec, values: np.ndarray, **kwargs) -> GridField:
    """Wrap a scalar sample into component 0 of a GridField."""
    data = np.zeros((3,) + values.shape)
    data[0] = values
    return GridField(spec=spec, data=data, **kwargs)


def write_field(fld: GridField, path: str) -> None:
    n = fld.spec.resolution
    header = _HEADER.pack(_MAGIC, _VERSION, n, fld.spec.half_width,
                          fld.time, fld.window_radius)
    # x-fastest payload order; in-memory layout is [c, ix, iy, iz] C-order
    payload = np.ascontiguousarray(fld.data.transpose(0, 3, 2, 1)).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    sidecar = {"N": n, "L": fld.spec.half_width, "time": fld.time,
               "window_radius": fld.window_radius, "meta": fld.meta}
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_field(path: str) -> GridField:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, n, half_width, time, window_radius = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError(f"not a field file: bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"unsupported format version {version}")
        payload = np.frombuffer(fh.read(3 * n ** 3 * 8), dtype="<f8")
    if payload.size != 3 * n ** 3:
        raise ValueError("truncated field file")
    data = payload.reshape(3, n, n, n).transpose(0, 3, 2, 1)
    meta = {}
    try:
        with open(path + ".json") as fh:
            meta = json.load(fh).get("meta", {})
    except (OSError, json.JSONDecodeError):
        pass
    return GridField(spec=GridSpec(half_width, n), data=data.copy(),
                     time=time, window_radius=window_radius, meta=meta)
