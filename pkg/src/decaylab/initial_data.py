"""Divergence-free fields on R^3 with a prescribed power-law tail.

The scalar side is a radial amplitude a(r) with a(r) ~ m0 r^(-alpha) at
infinity; the vector side is the swirl field u0 = curl(f(|x|) e3), which is
solenoidal by construction and inherits the tail exponent.

Two amplitude families:

smooth-power    a(r) = m0 (1 + r^2)^(-alpha/2).  Smooth everywhere, but its
                core carries surplus mass over the pure power r^(-alpha),
                which feeds a t^(-(3-alpha)/2) relative correction into the
                heat flow and biases finite-window exponent fits.
matched-power   exactly m0 r^(-alpha) outside cap_radius, even quartic cap
                inside with a C^1 match and zero core mass defect, killing
                that bias.  Requires alpha < 3 (the matching moment diverges
                at alpha = 3; the divergence is what produces the log there).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import GridField, GridSpec, taper_window

_FORMS = ("smooth-power", "matched-power")


@lru_cache(maxsize=32)
def _cap_coefficients(alpha: float) -> tuple[float, float, float]:
    # p0 + p2 u^2 + p4 u^4 on u in [0,1]: match value and slope of u^-alpha
    # at u=1 and the core moment int_0^1 u^(2-alpha) du = 1/(3-alpha)
    m = np.array([[1.0, 1.0, 1.0],
                  [0.0, 2.0, 4.0],
                  [1 / 3, 1 / 5, 1 / 7]])
    rhs = np.array([1.0, -alpha, 1.0 / (3.0 - alpha)])
    p0, p2, p4 = np.linalg.solve(m, rhs)
    return float(p0), float(p2), float(p4)


@dataclass(frozen=True)
class RadialProfile:
    """Scalar radial amplitude with tail m0 r^(-alpha)."""

    alpha: float
    m0: float = 1.0
    form: str = "smooth-power"
    cap_radius: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 3.0:
            raise ValueError("alpha must lie in (0, 3]")
        if self.m0 < 0:
            raise ValueError("m0 must be nonnegative")
        if self.form not in _FORMS:
            raise ValueError(f"unknown profile form {self.form!r}")
        if self.form == "matched-power":
            if self.alpha >= 3.0:
                raise ValueError("matched-power requires alpha < 3")
            if self.cap_radius <= 0:
                raise ValueError("cap_radius must be positive")

    def amplitude(self, r):
        r = np.asarray(r, dtype=float)
        if self.form == "smooth-power":
            return self.m0 * (1.0 + r * r) ** (-self.alpha / 2.0)
        p0, p2, p4 = _cap_coefficients(self.alpha)
        u = r / self.cap_radius
        inner = self.cap_radius ** -self.alpha * np.polyval([p4, p2, p0], u * u)
        with np.errstate(divide="ignore"):
            outer = np.where(r > 0, r, 1.0) ** -self.alpha
        return self.m0 * np.where(u < 1.0, inner, outer)

    def __call__(self, r):
        return self.amplitude(r)


@dataclass(frozen=True)
class InitialField:
    """u0 = curl(f(|x|) e3) = g(r) (x2, -x1, 0) with g = f'/r.

    With f'(r) = m0 r (1+r^2)^(-(1+alpha)/2) the swirl amplitude is
    g(r) = m0 (1+r^2)^(-(1+alpha)/2), so |u0| <= m0 r^(-alpha) with the sup
    over each sphere attained on the equator.  div u0 = 0 identically.
    """

    profile: RadialProfile

    def __post_init__(self):
        if self.profile.form != "smooth-power":
            raise ValueError("vector construction uses the smooth-power form")

    @property
    def alpha(self) -> float:
        return self.profile.alpha

    @property
    def m0(self) -> float:
        return self.profile.m0

    def swirl_amplitude(self, r):
        r = np.asarray(r, dtype=float)
        return self.m0 * (1.0 + r * r) ** (-(1.0 + self.alpha) / 2.0)

    def vector_potential_amplitude(self, r):
        """f(r) with u0 = curl(f e3); the alpha = 1 antiderivative is a log."""
        r = np.asarray(r, dtype=float)
        a = self.alpha
        if a == 1.0:
            return self.m0 * 0.5 * np.log1p(r * r)
        return self.m0 * (1.0 + r * r) ** ((1.0 - a) / 2.0) / (1.0 - a)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != 3:
            raise ValueError("points must have a trailing axis of length 3")
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        g = self.swirl_amplitude(r)
        out = np.empty_like(pts)
        out[..., 0] = g * pts[..., 1]
        out[..., 1] = -g * pts[..., 0]
        out[..., 2] = 0.0
        return out


def make_slow_decay_field(profile: RadialProfile) -> InitialField:
    """Solenoidal field with |u0(x)| ~ m0 |x|^(-alpha)."""
    return InitialField(profile)


def effective_m0(field: InitialField, radii=None) -> float:
    """sup over probe radii of (1+|x|)^alpha |u0(x)|.

    The sup over each sphere sits on the equator, so equatorial probes
    x = (r, 0, 0) suffice.  This measured constant, not m0 itself, is what
    the smallness conditions of the iteration are stated in.
    """
    if radii is None:
        radii = np.geomspace(1e-2, 1e3, 600)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("empty probe set")
    pts = np.zeros(radii.shape + (3,))
    pts[..., 0] = radii
    mag = np.sqrt(np.sum(field(pts) ** 2, axis=-1))
    return float(np.max((1.0 + radii) ** field.alpha * mag))


def sample_to_grid(field: InitialField, spec: GridSpec,
                   window: bool = True) -> GridField:
    """Sample u0 at the grid nodes, tapered to zero at the box boundary so
    the periodic extension is consistent.  The taper breaks exact
    solenoidality near the boundary; the projection step restores it."""
    ax = spec.axis()
    x = ax[:, None, None]
    y = ax[None, :, None]
    z = ax[None, None, :]
    r = np.sqrt(x * x + y * y + z * z)
    g = field.swirl_amplitude(r)
    if window:
        g = g * taper_window(r, spec.half_width)
    data = np.stack([g * np.broadcast_to(y, r.shape),
                     -g * np.broadcast_to(x, r.shape),
                     np.zeros_like(r)])
    return GridField(
        spec=spec, data=data, time=0.0,
        window_radius=0.8 * spec.half_width if window else 0.0,
        meta={"provenance": f"initial-data alpha={field.alpha} m0={field.m0}"})
