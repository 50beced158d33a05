"""Closed-form fundamental solutions in three dimensions.

heat_kernel        Gauss-Weierstrass kernel.
newtonian          -1/(4 pi |x|) and its first two derivative tensors.
heat_potential     the Newtonian potential of the heat kernel (their
                   convolution) with analytic derivatives up to order 3.
oseen_tensor       nonstationary Stokes fundamental tensor and its gradient,
                   assembled from the two kernels above.

Everything is vectorized over a leading probe axis: x has shape (..., 3),
t is a scalar or broadcasts against the probe axis.  Derivative tensors index
probe axes first, tensor indices last.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .reports import BoundReport

_SQRT_PI = np.sqrt(np.pi)
# erf(z)/z switches to its Maclaurin series below this; the direct formula
# loses ~eps * z^-4 relative accuracy in the third derivative, so the seam
# sits where both branches carry full double precision.
SERIES_THRESHOLD = 0.5
_KMAX = 21

_k = np.arange(_KMAX, dtype=float)
_fact = np.ones(_KMAX)
for _i in range(1, _KMAX):
    _fact[_i] = _fact[_i - 1] * _i
# Maclaurin coefficients of erf(z)/z in y = z^2
_C = (-1.0) ** _k / (_fact * (2.0 * _k + 1.0))

# polynomial coefficients in y = z^2, highest order first for polyval
_P_PHI = (_C)[::-1]
_P_PSI1 = (2.0 * _k * _C)[1:][::-1]                       # phi'/z
_P_DDPHI = (2.0 * _k * (2.0 * _k - 1.0) * _C)[1:][::-1]   # phi''
_P_DDDPHI = (2.0 * _k * (2.0 * _k - 1.0) * (2.0 * _k - 2.0) * _C)[2:][::-1]  # phi'''/z
_P_PSI2 = (2.0 * _k * (2.0 * _k - 2.0) * _C)[2:][::-1]    # (phi''/z - phi'/z^2)/z


@dataclass(frozen=True)
class SpacePoint:
    """A space-time probe."""

    x: tuple[float, float, float]
    t: float

    def __post_init__(self):
        if len(self.x) != 3 or not all(np.isfinite(self.x)):
            raise ValueError("x must be a finite 3-vector")
        if not (np.isfinite(self.t) and self.t >= 0):
            raise ValueError("t must be finite and nonnegative")


@dataclass(frozen=True)
class KernelOrder:
    """Derivative order for the composite kernel; the Stokes gradient terms
    need third derivatives, nothing needs more."""

    m: int

    def __post_init__(self):
        if self.m not in (0, 1, 2, 3):
            raise ValueError("derivative order must be in 0..3")


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise ValueError("t must be strictly positive and finite")
    return t


def _split_x(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("x must have a trailing axis of length 3")
    return x, np.sqrt(np.sum(x * x, axis=-1))


def heat_kernel(x, t):
    """(4 pi t)^(-3/2) exp(-|x|^2 / 4t)."""
    x, r = _split_x(x)
    t = _check_t(t)
    return (4.0 * np.pi * t) ** -1.5 * np.exp(-r * r / (4.0 * t))


def grad_heat_kernel(x, t):
    """Gradient of the heat kernel, shape (..., 3)."""
    x, r = _split_x(x)
    t = _check_t(t)
    g = (4.0 * np.pi * t) ** -1.5 * np.exp(-r * r / (4.0 * t))
    return -x * (g / (2.0 * t))[..., None]


def newtonian(x):
    """-1/(4 pi |x|); the kernel solving Lap N = delta."""
    _, r = _split_x(x)
    if np.any(r == 0):
        raise ValueError("newtonian potential is singular at the origin")
    return -1.0 / (4.0 * np.pi * r)


def grad_newtonian(x):
    x, r = _split_x(x)
    if np.any(r == 0):
        raise ValueError("newtonian potential is singular at the origin")
    return x / (4.0 * np.pi * r ** 3)[..., None]


def hess_newtonian(x):
    """Second derivative tensor, trace-free away from the origin."""
    x, r = _split_x(x)
    if np.any(r == 0):
        raise ValueError("newtonian potential is singular at the origin")
    n = x / r[..., None]
    eye = np.eye(3)
    nn = n[..., :, None] * n[..., None, :]
    return (eye - 3.0 * nn) / (4.0 * np.pi * r ** 3)[..., None, None]


def _phi_family(z):
    """Stable evaluation of phi = erf(z)/z and the derived radial factors.

    Returns (phi, dphi, psi1, ddphi, psi2, dddphi) with
    psi1 = phi'/z and psi2 = phi''/z - phi'/z^2; both limits are finite at 0.
    """
    z = np.asarray(z, dtype=float)
    y = z * z
    small = z < SERIES_THRESHOLD
    c = 2.0 / _SQRT_PI

    phi = np.empty_like(z)
    dphi = np.empty_like(z)
    psi1 = np.empty_like(z)
    ddphi = np.empty_like(z)
    psi2 = np.empty_like(z)
    dddphi = np.empty_like(z)

    if np.any(small):
        ys = y[small]
        zs = z[small]
        phi[small] = c * np.polyval(_P_PHI, ys)
        psi1[small] = c * np.polyval(_P_PSI1, ys)
        dphi[small] = zs * psi1[small]
        ddphi[small] = c * np.polyval(_P_DDPHI, ys)
        psi2[small] = zs * (c * np.polyval(_P_PSI2, ys))
        dddphi[small] = zs * (c * np.polyval(_P_DDDPHI, ys))

    big = ~small
    if np.any(big):
        zb = z[big]
        E = erf(zb)
        g = c * np.exp(-zb * zb)
        phi[big] = E / zb
        dphi[big] = g / zb - E / zb ** 2
        psi1[big] = dphi[big] / zb
        ddphi[big] = -2.0 * g - 2.0 * g / zb ** 2 + 2.0 * E / zb ** 3
        dddphi[big] = g * (4.0 * zb + 4.0 / zb + 6.0 / zb ** 3) - 6.0 * E / zb ** 4
        psi2[big] = ddphi[big] / zb - dphi[big] / zb ** 2
    return phi, dphi, psi1, ddphi, psi2, dddphi


def heat_potential(x, t, order: int = 0):
    """Derivative tensors of w(x,t) = (N * Gamma_t)(x) = -erf(|x|/2 sqrt(t)) / (4 pi |x|).

    order 0 -> (...,), 1 -> (...,3), 2 -> (...,3,3), 3 -> (...,3,3,3).
    The kernel obeys Lap w = Gamma and the parabolic scaling
    D^k w(l x, l^2 t) = l^(-1-k) D^k w(x, t).
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be in 0..3")
    x, r = _split_x(x)
    t = _check_t(t)
    st = np.sqrt(t)
    z = r / (2.0 * st)
    phi, dphi, psi1, ddphi, psi2, dddphi = _phi_family(z)

    if order == 0:
        return -phi / (8.0 * np.pi * st)

    # unit directions; the r=0 probes are overridden by their radial limits
    rsafe = np.where(r > 0, r, 1.0)
    n = x / rsafe[..., None]
    at0 = (r == 0)

    if order == 1:
        w_r = -dphi / (16.0 * np.pi * t)
        out = n * w_r[..., None]
        if np.any(at0):
            out[at0] = 0.0
        return out

    eye = np.eye(3)
    if order == 2:
        pref = -1.0 / (32.0 * np.pi * t ** 1.5)
        nn = n[..., :, None] * n[..., None, :]
        out = pref[..., None, None] * (ddphi[..., None, None] * nn
                                       + psi1[..., None, None] * (eye - nn))
        if np.any(at0):
            # radial limit: w''(0) I
            out[at0] = (pref * psi1)[at0][..., None, None] * eye
        return out

    pref = -1.0 / (64.0 * np.pi * t ** 2)
    nn = n[..., :, None] * n[..., None, :]
    nnn = nn[..., :, :, None] * n[..., None, None, :]
    sym = (eye[:, :, None] * n[..., None, None, :]
           + eye[None, :, :] * n[..., :, None, None]
           + eye[:, None, :] * n[..., None, :, None])
    out = pref[..., None, None, None] * (dddphi[..., None, None, None] * nnn
                                         + psi2[..., None, None, None] * (sym - 3.0 * nnn))
    if np.any(at0):
        out[at0] = 0.0
    return out


def oseen_tensor(x, t, order: int = 0):
    """Stokes fundamental tensor G_ij = Gamma d_ij - d_i d_j w.

    order 0 returns G with shape (..., 3, 3); order 1 returns the spatial
    gradient with shape (..., 3, 3, 3) indexed [..., i, j, k] = d_k G_ij.
    Symmetric in (i, j); each column is divergence free.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if order == 0:
        g = heat_kernel(x, t)
        return g[..., None, None] * np.eye(3) - heat_potential(x, t, order=2)
    dg = grad_heat_kernel(x, t)
    d3w = heat_potential(x, t, order=3)
    # d3w is symmetric in all three indices, so [..., i, j, k] already
    # matches d_i d_j d_k w
    return np.einsum("...k,ij->...ijk", dg, np.eye(3)) - d3w


def kernel_envelope_report(radii=None, times=None, budgets=None,
                           trend_tol: float = 0.02) -> list[BoundReport]:
    """Certify |D^k w| <= c (|x| + sqrt t)^(-1-k) for k = 0..3 on a log grid.

    Returns one BoundReport per order.  Budgets default to frozen reference
    values (10x the observed suprema on this grid).
    """
    from .budgets import load_budgets

    if radii is None:
        radii = np.geomspace(1e-2, 1e3, 41)
    if times is None:
        times = np.geomspace(1e-2, 1e3, 31)
    if budgets is None:
        budgets = [load_budgets()["kernel_envelope"][f"order_{k}"] for k in range(4)]

    R, T = np.meshgrid(np.asarray(radii, float), np.asarray(times, float),
                       indexing="ij")
    # radial kernels: probe along a fixed direction
    direction = np.array([1.0, 0.0, 0.0])
    X = R[..., None] * direction
    scale = R + np.sqrt(T)
    reports = []
    for k in range(4):
        d = heat_potential(X, T, order=k)
        mag = np.abs(d)
        while mag.ndim > R.ndim:
            mag = mag.max(axis=-1)
        ratio = mag * scale ** (1 + k)
        rep = BoundReport.evaluate(
            check=f"heat-potential-envelope-order-{k}",
            claim=f"sup |D^{k} w| (|x|+sqrt t)^{1 + k} bounded",
            scale=scale, ratio=ratio, budget=budgets[k], trend_tol=trend_tol)
        reports.append(rep)
    return reports


def oseen_envelope_report(radii=None, times=None, budgets=None,
                          trend_tol: float = 0.02) -> list[BoundReport]:
    """|G| <= c (|x| + sqrt t)^-3 and |grad G| <= c (|x| + sqrt t)^-4; both
    pieces of the tensor obey the same envelope, so the sum does."""
    from .budgets import load_budgets

    if radii is None:
        radii = np.geomspace(1e-2, 1e3, 41)
    if times is None:
        times = np.geomspace(1e-2, 1e3, 31)
    if budgets is None:
        budgets = [load_budgets()["oseen_envelope"][f"order_{k}"] for k in range(2)]

    R, T = np.meshgrid(np.asarray(radii, float), np.asarray(times, float),
                       indexing="ij")
    direction = np.array([1.0, 0.0, 0.0])
    X = R[..., None] * direction
    scale = R + np.sqrt(T)
    reports = []
    for k in range(2):
        mag = np.abs(oseen_tensor(X, T, order=k))
        while mag.ndim > R.ndim:
            mag = mag.max(axis=-1)
        ratio = mag * scale ** (3 + k)
        reports.append(BoundReport.evaluate(
            check=f"oseen-envelope-order-{k}",
            claim=f"sup |D^{k} G| (|x|+sqrt t)^{3 + k} bounded",
            scale=scale, ratio=ratio, budget=budgets[k], trend_tol=trend_tol))
    return reports


def heat_kernel_envelope_control(radii=None, times=None,
                                 budget: float = 0.5) -> BoundReport:
    """Negative control: the heat kernel against the too-strong envelope
    (|x| + sqrt t)^(-4).  The ratio grows like sqrt(t) at large times, so the
    growth-trend detector must fail this check."""
    if radii is None:
        radii = np.geomspace(1e-2, 1e3, 41)
    if times is None:
        times = np.geomspace(1e-2, 1e3, 31)
    R, T = np.meshgrid(np.asarray(radii, float), np.asarray(times, float),
                       indexing="ij")
    direction = np.array([1.0, 0.0, 0.0])
    X = R[..., None] * direction
    scale = R + np.sqrt(T)
    ratio = heat_kernel(X, T) * scale ** 4
    return BoundReport.evaluate(
        check="heat-kernel-overtight-envelope",
        claim="Gamma (|x|+sqrt t)^4 bounded (expected to fail)",
        scale=scale, ratio=ratio, budget=budget)
