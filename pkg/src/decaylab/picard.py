"""Picard iteration for the mild Navier-Stokes solution on the periodic box.

Each iterate is a trajectory: velocity fields on a geometric grid of time
nodes, linear in time between nodes.  The update is

    u_next(t) = heat_flow(u0)(t) - duhamel(u_prev (x) u_prev)(t),

with the Duhamel integral quadratured over the trajectory nodes below t,
refined per interval and graded toward the t endpoint where the kernel
concentrates.  Contraction is measured in a weighted sup norm whose weights
undo the expected decay of each channel (L^q, L^inf, gradient in L^3); a
logarithmic factor joins the weights exactly in the critical case alpha = 3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridField, GridSpec
from .initial_data import RadialProfile, make_slow_decay_field, sample_to_grid
from .reports import DecaySeries
from .semigroup import (NormProbe, _fwd, _inv, _lq_of_magnitude, _sym_div_hat,
                        _wavenumbers, duhamel_convolve, field_norm,
                        gradient_norm, leray_project, outer_sym,
                        spectral_divergence_rms)

CHANNELS = ("lq", "linf", "grad_l3")


@dataclass(frozen=True)
class PicardConfig:
    alpha: float
    q: float
    m0: float
    spec: GridSpec
    t_max: float = 100.0
    max_iter: int = 8
    conv_tol: float = 1e-3
    subdiv: int = 2
    end_subdiv: int = 8

    def __post_init__(self):
        if not 1 <= self.alpha <= 3:
            raise ValueError("alpha must lie in [1, 3]")
        # admissible window 3/alpha < q < 3/(alpha-1), capped at 12 because
        # very high q turns the norm into a noisy near-sup on the grid
        win_hi = 3.0 / (self.alpha - 1.0) if self.alpha > 1 else math.inf
        if not (3.0 / self.alpha < self.q < win_hi and self.q <= 12.0):
            raise ValueError(f"q={self.q:g} outside the admissible window "
                             f"({3.0 / self.alpha:g}, {win_hi:g}), cap 12")
        if self.subdiv % 2 or self.end_subdiv % 2:
            raise ValueError("subdivision counts must be even (halving estimate)")
        if math.sqrt(self.t_max) > 0.2 * self.spec.half_width:
            raise ValueError("t_max too large for the box")

    @property
    def log_power(self) -> float:
        return 1.0 if self.alpha == 3 else 0.0

    @property
    def probe_radius(self) -> float:
        return 0.8 * self.spec.half_width


def default_time_grid(t_max: float = 100.0) -> np.ndarray:
    """0 followed by 0.25 * sqrt(2)^j, capped at t_max."""
    nodes = [0.0]
    t = 0.25
    while t < t_max * (1 - 1e-9):
        nodes.append(t)
        t *= math.sqrt(2.0)
    nodes.append(t_max)
    return np.asarray(nodes)


@dataclass
class Trajectory:
    times: np.ndarray
    fields: list[GridField]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.fields):
            raise ValueError("one field per time node")

    @property
    def spec(self) -> GridSpec:
        return self.fields[0].spec

    def at(self, tau: float) -> np.ndarray:
        """Piecewise-linear interpolant between node fields; exact at nodes."""
        j = int(np.searchsorted(self.times, tau, side="right")) - 1
        j = min(max(j, 0), len(self.times) - 2)
        a, b = self.times[j], self.times[j + 1]
        theta = (tau - a) / (b - a)
        if theta == 0.0:
            return self.fields[j].data
        if theta == 1.0:
            return self.fields[j + 1].data
        return (1.0 - theta) * self.fields[j].data + theta * self.fields[j + 1].data


def trajectory_diff(a: Trajectory, b: Trajectory) -> Trajectory:
    if not np.array_equal(a.times, b.times):
        raise ValueError("trajectories live on different time grids")
    fields = [fa.with_data(fa.data - fb.data)
              for fa, fb in zip(a.fields, b.fields)]
    return Trajectory(a.times, fields)


def initial_trajectory(u0: GridField, times) -> Trajectory:
    """Heat flow of u0 sampled at the nodes; the base field is transformed once."""
    times = np.asarray(times, dtype=float)
    _, _, _, k2 = _wavenumbers(u0.spec)
    uh0 = _fwd(u0.data)
    fields = []
    for t in times:
        if t == 0.0:
            fields.append(u0)
            continue
        data = _inv(uh0 * np.exp(-k2 * t), u0.spec.resolution)
        fields.append(u0.with_data(data, time=float(t)))
    return Trajectory(times, fields)


def _node_mesh(times: np.ndarray, subdiv: int, end_subdiv: int) -> np.ndarray:
    """Quadrature mesh for the Duhamel integral up to times[-1]: every earlier
    inter-node interval split evenly, the final interval graded toward its
    right endpoint."""
    parts = []
    for a, b in zip(times[:-2], times[1:-1]):
        parts.append(np.linspace(a, b, subdiv + 1)[:-1])
    a, b = times[-2], times[-1]
    s = np.arange(end_subdiv + 1) / end_subdiv
    # 1 - (1-s)^2 has shrinking steps as s -> 1: nodes pile up at the right
    # endpoint, where the heat factor is steepest
    parts.append(a + (b - a) * (1.0 - (1.0 - s) ** 2))
    return np.concatenate(parts)


def picard_step(prev: Trajectory, u0hat: np.ndarray,
                config: PicardConfig) -> Trajectory:
    """One update of the whole trajectory.  u0hat is the spectrum of the
    (projected) initial field; the linear part is regenerated from it per node
    rather than stored."""
    spec = prev.spec
    _, _, _, k2 = _wavenumbers(spec)
    times = prev.times
    fields = [prev.fields[0]]
    errors = [0.0]
    for i in range(1, len(times)):
        t = float(times[i])
        mesh = _node_mesh(times[: i + 1], config.subdiv, config.end_subdiv)

        def forcing(tau):
            return outer_sym(prev.at(tau))

        correction, err = duhamel_convolve(forcing, t, spec, mesh=mesh,
                                           halving_tol=np.inf)
        linear = _inv(u0hat * np.exp(-k2 * t), spec.resolution)
        data = linear - correction.data
        if not np.all(np.isfinite(data)):
            raise FloatingPointError(f"iterate blew up at node t={t:g}")
        fields.append(prev.fields[0].with_data(data, time=t))
        errors.append(err)
    return Trajectory(times, fields, meta={"duhamel_errors": errors})


def x_weights(t: np.ndarray, alpha: float, q: float, log_power: float):
    """Reciprocal decay weights per channel; sup of weight * norm should stay
    bounded along a decaying trajectory."""
    t = np.asarray(t, dtype=float)
    lg = np.log(2.0 + t) ** log_power
    return {
        "lq": (1.0 + t) ** (alpha / 2.0 - 3.0 / (2.0 * q)) * lg,
        "linf": (1.0 + t) ** (alpha / 2.0) * lg,
        "grad_l3": np.sqrt(t) * (1.0 + t) ** ((alpha - 1.0) / 2.0) * lg,
    }


@dataclass(frozen=True)
class DecayNormReport:
    x_norm: float
    channels: dict[str, float]
    attained_at: dict[str, float]
    times: np.ndarray
    series: dict[str, np.ndarray]


def decay_norm(traj: Trajectory, config: PicardConfig) -> DecayNormReport:
    r = config.probe_radius
    probe_q = NormProbe(q=config.q, trunc_radius=r)
    probe_inf = NormProbe(q=np.inf, trunc_radius=r)
    series = {name: np.zeros(len(traj.times)) for name in CHANNELS}
    for i, fld in enumerate(traj.fields):
        series["lq"][i] = field_norm(fld, probe_q)
        series["linf"][i] = field_norm(fld, probe_inf)
        series["grad_l3"][i] = gradient_norm(fld, 3.0, r)
    weights = x_weights(traj.times, config.alpha, config.q, config.log_power)
    channels, attained = {}, {}
    for name in CHANNELS:
        weighted = weights[name] * series[name]
        k = int(np.argmax(weighted))
        channels[name] = float(weighted[k])
        attained[name] = float(traj.times[k])
    return DecayNormReport(x_norm=float(sum(channels.values())),
                           channels=channels, attained_at=attained,
                           times=traj.times, series=series)


@dataclass
class PicardResult:
    config: PicardConfig
    times: np.ndarray
    linear_report: DecayNormReport
    diff_norms: list[float]
    ratios: list[float]
    iterate_x_norms: list[float]
    converged: bool
    diverged: bool
    iterations: int
    final_report: DecayNormReport
    final: Trajectory
    duhamel_error: float
    divergence_rms: float

    def correction_report(self) -> DecayNormReport:
        """Weighted norm of final - linear part, the accumulated nonlinear
        correction."""
        base = initial_trajectory(self.final.fields[0], self.times)
        return decay_norm(trajectory_diff(self.final, base), self.config)


def build_initial_field(config: PicardConfig) -> GridField:
    profile = RadialProfile(alpha=config.alpha, m0=config.m0)
    sampled = sample_to_grid(make_slow_decay_field(profile), config.spec)
    # the taper breaks exact solenoidality in the shell; project it back
    return leray_project(sampled)


def picard_run(config: PicardConfig, initial_field: GridField | None = None,
               times=None, progress=None) -> PicardResult:
    u0g = initial_field if initial_field is not None else build_initial_field(config)
    if times is None:
        times = default_time_grid(config.t_max)
    u0hat = _fwd(u0g.data)
    prev = initial_trajectory(u0g, times)
    linear_report = decay_norm(prev, config)
    floor = max(linear_report.x_norm, 1e-300)

    diff_norms: list[float] = []
    ratios: list[float] = []
    x_norms: list[float] = [linear_report.x_norm]
    converged = diverged = False
    duh_err = 0.0
    nxt = prev
    iterations = 0
    for m in range(1, config.max_iter + 1):
        try:
            nxt = picard_step(prev, u0hat, config)
        except FloatingPointError:
            # the step aborted on a non-finite iterate; report the last
            # finite one rather than crash the amplitude search
            nxt = prev
            diverged = True
            break
        duh_err = max(duh_err, max(nxt.meta["duhamel_errors"]))
        report = decay_norm(nxt, config)
        x_norms.append(report.x_norm)
        diff = decay_norm(trajectory_diff(nxt, prev), config).x_norm
        diff_norms.append(diff)
        if len(diff_norms) >= 2:
            ratios.append(diff_norms[-1] / max(diff_norms[-2], 1e-300))
        iterations = m
        if progress is not None:
            progress(m, diff, ratios[-1] if ratios else None)
        prev = nxt
        if diff <= config.conv_tol * floor:
            converged = True
            break
        if len(ratios) >= 2 and ratios[-1] > 1.0 and ratios[-2] > 1.0:
            diverged = True
            break

    final_report = decay_norm(nxt, config)
    div_rms = max(spectral_divergence_rms(f) for f in nxt.fields)
    return PicardResult(config=config, times=np.asarray(times, dtype=float),
                        linear_report=linear_report, diff_norms=diff_norms,
                        ratios=ratios, iterate_x_norms=x_norms,
                        converged=converged, diverged=diverged,
                        iterations=iterations, final_report=final_report,
                        final=nxt, duhamel_error=duh_err,
                        divergence_rms=div_rms)


def contraction_ratio(result: PicardResult) -> float:
    """Worst successive-difference ratio after the first correction."""
    return max(result.ratios) if result.ratios else 0.0


def smallness_response(config: PicardConfig, factor: float = 2.0,
                       **run_kwargs):
    """Accumulated nonlinear correction at amplitude m0 and m0/factor.
    The first Duhamel term is quadratic in the data, so the ratio should land
    near factor^2."""
    small = replace(config, m0=config.m0 / factor)
    full = picard_run(config, **run_kwargs)
    half = picard_run(small, **run_kwargs)
    big = full.correction_report().x_norm
    lit = half.correction_report().x_norm
    return big, lit, big / max(lit, 1e-300)


def predicted_bilinear_slope(r: float, q: float) -> float:
    """Decay rate t^(-1/2 - (3/2)(1/r - 1/q)) of the heat flow of P div F
    when F sits on the edge of L^r."""
    return -0.5 - 1.5 * (1.0 / r - 1.0 / q)


def bilinear_decay_probe(source, q: float, r: float | None = None,
                         tau: float = 0.0, times=None,
                         spectral_tensor=None) -> DecaySeries:
    """L^q norms of exp(t Lap) P div (u (x) u) over a log-spaced time grid,
    u taken from the given snapshot (or from a trajectory at time tau).

    r, when given, is the Lebesgue index the tensor is measured in; the
    matching rate lands in meta["predicted_slope"].  spectral_tensor
    substitutes an analytically known tensor spectrum (6, N, N, N//2+1) for
    the grid transform of the outer product - the sampling-free route used
    to cross-check the spectral pipeline.
    """
    if isinstance(source, Trajectory):
        source = source.fields[0].with_data(source.at(tau), time=float(tau))
    spec = source.spec
    n = spec.resolution
    kx, ky, kz, k2 = _wavenumbers(spec)
    if spectral_tensor is None:
        f6h = _fwd(outer_sym(source.data))
    else:
        f6h = np.asarray(spectral_tensor)
    vh = _sym_div_hat(f6h, kx, ky, kz)
    dot = kx * vh[0] + ky * vh[1] + kz * vh[2]
    comp = np.zeros_like(dot)
    np.divide(dot, k2, out=comp, where=k2 > 0)
    vh[0] -= kx * comp
    vh[1] -= ky * comp
    vh[2] -= kz * comp
    if times is None:
        t_hi = min(100.0, (0.2 * spec.half_width) ** 2)
        times = np.geomspace(0.1, t_hi, 17)
    times = np.asarray(times, dtype=float)
    radius = 0.8 * spec.half_width
    values = np.empty_like(times)
    for i, t in enumerate(times):
        v = _inv(vh * np.exp(-k2 * t), n)
        mag = np.sqrt(np.sum(v * v, axis=0))
        values[i] = _lq_of_magnitude(spec, mag, q, radius)
    meta = {"t": float(source.time)}
    if r is not None:
        meta["predicted_slope"] = predicted_bilinear_slope(r, q)
    return DecaySeries(times, values, label=f"bilinear-heat-decay-q-{q:g}",
                       meta=meta)


def threshold_bisection(config: PicardConfig, lo: float, hi: float,
                        steps: int = 8, ratio_cap: float = 0.5,
                        times=None) -> float:
    """Largest amplitude (to bisection resolution) at which the iteration still
    contracts with worst ratio <= ratio_cap.  lo must contract, hi must not."""
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        trial = replace(config, m0=mid)
        res = picard_run(trial, times=times)
        ok = res.ratios and max(res.ratios) <= ratio_cap and not res.diverged
        if ok:
            lo = mid
        else:
            hi = mid
    return lo
