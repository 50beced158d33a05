"""Batch driver: each verification family as a subcommand.

Flat key=value configs with --key=value overrides, machine-readable outputs
under --out (JSON per check, CSV per decay series, one summary.tsv per run).
Every command is deterministic for a given config: fixed probe grids, fixed
reduction order, no randomness; JSON carries the only wall-clock fields.

Exit codes: 0 all checks pass, 1 check failure, 2 iteration failed to
contract, 64 bad usage or config.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analysis
from .budgets import load_budgets, use_budgets_file
from .grid import GridSpec, write_field
from .initial_data import RadialProfile, make_slow_decay_field, sample_to_grid
from .kernels import kernel_envelope_report, oseen_envelope_report
from .oracle import radial_lq_norm, radial_probe_grid
from .picard import (PicardConfig, contraction_ratio, default_time_grid,
                     picard_run, threshold_bisection, x_weights)
from .reports import DecaySeries, fit_decay_exponent
from .semigroup import NormProbe, heat_series

EXIT_OK, EXIT_CHECK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64


@dataclass(frozen=True)
class RunConfig:
    """Flat run parameters; zeros mean 'profile default'."""

    profile: str = "quick"
    alpha: float = 1.0
    q: float = 4.0
    m0: float = 0.0
    resolution: int = 0
    half_width: float = 0.0
    t_max: float = 0.0
    max_iter: int = 8
    conv_tol: float = 1e-3
    heat_pairs: str = ""
    gradient_pairs: str = "1:3,2:3"
    probe_density: float = 1.0
    dump_fields: int = 0
    budgets: str = ""


_PROFILES = {
    "quick": dict(
        ns_resolution=64, ns_half_width=40.0, ns_t_max=50.0,
        ns_fit_window=(1.0, 50.0), ns_slope_tol=0.12,
        grad_resolution=64, grad_half_width=64.0, grad_t_hi=160.0,
        grad_fit_window=(2.0, 160.0), grad_slope_tol=0.15,
        heat_pairs="1:inf,2:3", heat_times=17, heat_radii=120,
        heat_slope_tol=0.05,
        envelope_alphas=(2.0, 3.0), sweep_values=3,
    ),
    "full": dict(
        ns_resolution=128, ns_half_width=256.0, ns_t_max=100.0,
        ns_fit_window=(2.0, 100.0), ns_slope_tol=0.07,
        grad_resolution=128, grad_half_width=256.0, grad_t_hi=1000.0,
        grad_fit_window=(10.0, 1000.0), grad_slope_tol=0.07,
        heat_pairs="1:inf,2:inf,2:3,2.5:2,3:inf", heat_times=25,
        heat_radii=240, heat_slope_tol=0.05,
        envelope_alphas=(1.0, 1.5, 2.0, 2.5, 3.0), sweep_values=5,
    ),
}


def _parse_pairs(text: str):
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        a, _, q = part.partition(":")
        out.append((float(a), math.inf if q in ("inf", "oo") else float(q)))
    return out


def _profile(cfg: RunConfig) -> dict:
    if cfg.profile not in _PROFILES:
        raise ConfigError(f"unknown profile {cfg.profile!r}")
    return _PROFILES[cfg.profile]


class ConfigError(ValueError):
    pass


def load_config(path: str) -> dict:
    values = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {raw!r}")
        values[key.strip()] = val.strip()
    return values


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    merged = dict(file_values)
    merged.update(overrides)
    by_name = {f.name: f for f in fields(RunConfig)}
    kwargs = {}
    for key, text in merged.items():
        f = by_name.get(key)
        if f is None:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _coerce(f.type, text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    return RunConfig(**kwargs)


def _coerce(ftype, text: str):
    if ftype in ("int", int):
        return int(text)
    if ftype in ("float", float):
        return float(text)
    return str(text)


# -- output plumbing ---------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _row(check, predicted, measured, tolerance, passed):
    return {"check": check, "predicted": predicted, "measured": measured,
            "tolerance": tolerance, "pass": bool(passed)}


def _bound_row(report):
    return _row(report.check, f"<= {_fmt(report.budget)}", report.sup_ratio,
                report.trend_tol, report.passed)


class Output:
    def __init__(self, outdir: Path):
        self.outdir = outdir
        outdir.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, payload: dict):
        path = self.outdir / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                                   default=_json_default) + "\n")

    def series(self, name: str, series: DecaySeries):
        lines = ["t,value"]
        lines += [f"{t:.12g},{v:.12g}" for t, v in zip(series.t, series.value)]
        (self.outdir / f"{name}.csv").write_text("\n".join(lines) + "\n")

    def table(self, name: str, header: list[str], rows: list[list]):
        lines = [",".join(header)]
        lines += [",".join(_fmt(c) for c in r) for r in rows]
        (self.outdir / f"{name}.csv").write_text("\n".join(lines) + "\n")

    def summary(self, rows: list[dict]):
        lines = ["check\tpredicted\tmeasured\ttolerance\tpass"]
        for r in rows:
            lines.append("\t".join([r["check"], _fmt(r["predicted"]),
                                    _fmt(r["measured"]), _fmt(r["tolerance"]),
                                    _fmt(r["pass"])]))
        (self.outdir / "summary.tsv").write_text("\n".join(lines) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)!r}")


# -- commands ----------------------------------------------------------------

def list_verify_kernels(cfg):
    return ([f"heat-potential-envelope-order-{k}" for k in range(4)]
            + [f"oseen-envelope-order-{k}" for k in range(2)])


def cmd_verify_kernels(cfg: RunConfig, out: Output):
    start = time.time()
    reports = kernel_envelope_report() + oseen_envelope_report()
    rows = [_bound_row(r) for r in reports]
    out.json("verify-kernels", {
        "reports": [r.as_dict() for r in reports],
        "runtime_s": round(time.time() - start, 3)})
    return rows


def list_heat_decay(cfg):
    prof = _profile(cfg)
    pairs = _parse_pairs(cfg.heat_pairs or prof["heat_pairs"])
    names = [f"heat-decay-alpha-{a:g}-q-{q:g}" for a, q in pairs]
    if any(a == 3.0 for a, _ in pairs):
        names += ["critical-log-growth", "critical-log-stability"]
    return names


def cmd_heat_decay(cfg: RunConfig, out: Output):
    start = time.time()
    prof = _profile(cfg)
    pairs = _parse_pairs(cfg.heat_pairs or prof["heat_pairs"])
    n_times = max(10, int(round(prof["heat_times"] * cfg.probe_density)))
    n_radii = max(60, int(round(prof["heat_radii"] * cfg.probe_density)))
    tol = prof["heat_slope_tol"]
    rows, payload = [], {"fits": []}
    for a, q in pairs:
        form = "smooth-power" if a == 3.0 else "matched-power"
        profile = RadialProfile(alpha=a, form=form)
        times = np.geomspace(1.0, 1000.0, n_times)
        values = np.array([
            _lq_norm_sized(profile, q, float(t), n_radii) for t in times])
        series = DecaySeries(times, values,
                             label=f"heat-decay-alpha-{a:g}-q-{q:g}")
        log_corr = a == 3.0 and math.isinf(q)
        fit = fit_decay_exponent(series, (10.0, 1000.0), log_corrected=log_corr)
        predicted = analysis.expected_heat_slope(a, q)
        name = f"heat-decay-alpha-{a:g}-q-{q:g}"
        out.series(name, series)
        rows.append(_row(name, predicted, fit.slope, tol,
                         abs(fit.slope - predicted) <= tol))
        payload["fits"].append({
            "alpha": a, "q": None if math.isinf(q) else q,
            "profile_form": form, "slope": fit.slope,
            "predicted": predicted, "residual_rms": fit.residual_rms,
            "log_corrected": log_corr})
    if any(a == 3.0 for a, _ in pairs):
        t_hi = 1e6 if cfg.profile == "full" else 1e4
        dich = analysis.critical_log_dichotomy(
            times=np.geomspace(1e2, t_hi, n_times))
        rows.append(_row("critical-log-growth", "> 0.05", dich.growth_trend,
                         0.05, dich.growth_trend > 0.05))
        rows.append(_row("critical-log-stability", "|trend| <= 0.02",
                         dich.stability_trend, 0.02,
                         abs(dich.stability_trend) <= 0.02))
        payload["critical_dichotomy"] = {
            "growth_trend": dich.growth_trend,
            "stability_trend": dich.stability_trend,
            "t_max": float(dich.times[-1])}
    payload["runtime_s"] = round(time.time() - start, 3)
    out.json("heat-decay", payload)
    return rows


def _lq_norm_sized(profile, q, t, n_radii):
    return radial_lq_norm(profile.amplitude, q, t,
                          radii=radial_probe_grid(t, n=n_radii))


def predicted_gradient_slope(alpha: float, q: float) -> float:
    """t^(-1/2) (1+t)^(-alpha/2 + 3/(2q)) for q <= 3; the t >= 1 branch for
    larger q drops the extra half power."""
    if q <= 3.0:
        return -0.5 - alpha / 2.0 + 1.5 / q
    return -alpha / 2.0


def list_gradient_decay(cfg):
    pairs = _parse_pairs(cfg.gradient_pairs)
    return [f"gradient-decay-alpha-{a:g}-q-{q:g}" for a, q in pairs]


def cmd_gradient_decay(cfg: RunConfig, out: Output):
    start = time.time()
    prof = _profile(cfg)
    n = cfg.resolution or prof["grad_resolution"]
    L = cfg.half_width or prof["grad_half_width"]
    spec = GridSpec(half_width=L, resolution=n)
    window = prof["grad_fit_window"]
    tol = prof["grad_slope_tol"]
    rows, payload = [], {"fits": [], "grid": {"resolution": n, "half_width": L}}
    for a, q in _parse_pairs(cfg.gradient_pairs):
        field = make_slow_decay_field(RadialProfile(alpha=a))
        sampled = sample_to_grid(field, spec)
        times = np.geomspace(window[0] / 2.0, prof["grad_t_hi"], 25)
        probe = NormProbe(q=q, trunc_radius=0.8 * L)
        _, values = heat_series(sampled, times, probe, gradient=True)
        series = DecaySeries(times, values,
                             label=f"gradient-decay-alpha-{a:g}-q-{q:g}")
        fit = fit_decay_exponent(series, window)
        predicted = predicted_gradient_slope(a, q)
        name = f"gradient-decay-alpha-{a:g}-q-{q:g}"
        out.series(name, series)
        rows.append(_row(name, predicted, fit.slope, tol,
                         abs(fit.slope - predicted) <= tol))
        payload["fits"].append({"alpha": a, "q": q, "slope": fit.slope,
                                "predicted": predicted,
                                "residual_rms": fit.residual_rms})
    payload["runtime_s"] = round(time.time() - start, 3)
    out.json("gradient-decay", payload)
    return rows


def list_navier_stokes(cfg):
    return ["ns-contraction", "ns-iterations", "ns-linf-slope", "ns-x-norm",
            "ns-solenoidality",
            f"pointwise-envelope-trajectory-alpha-{cfg.alpha:g}"]


def cmd_navier_stokes(cfg: RunConfig, out: Output):
    start = time.time()
    prof = _profile(cfg)
    budgets = load_budgets()["picard"]
    m0 = cfg.m0 or budgets[f"m0_threshold_{cfg.profile}"] / 2.0
    spec = GridSpec(half_width=cfg.half_width or prof["ns_half_width"],
                    resolution=cfg.resolution or prof["ns_resolution"])
    pcfg = PicardConfig(alpha=cfg.alpha, q=cfg.q, m0=m0, spec=spec,
                        t_max=cfg.t_max or prof["ns_t_max"],
                        max_iter=cfg.max_iter, conv_tol=cfg.conv_tol)
    result = picard_run(pcfg)

    rows = []
    rho = contraction_ratio(result)
    rows.append(_row("ns-contraction", "<= 0.5", rho, None,
                     bool(result.ratios) and rho <= 0.5 and not result.diverged))
    rows.append(_row("ns-iterations", f"<= {pcfg.max_iter}", result.iterations,
                     None, result.converged))

    report = result.final_report
    window = prof["ns_fit_window"]
    series = DecaySeries(np.asarray(report.times[1:]),
                         np.asarray(report.series["linf"][1:]),
                         label="ns-linf")
    try:
        fit = fit_decay_exponent(series, window,
                                 log_corrected=pcfg.log_power > 0)
    except ValueError:
        # a short t_max override can leave too little of the window to fit;
        # divergence reporting below must still happen
        fit = None
    if fit is not None:
        predicted = -pcfg.alpha / 2.0
        rows.append(_row("ns-linf-slope", predicted, fit.slope,
                         prof["ns_slope_tol"],
                         abs(fit.slope - predicted) <= prof["ns_slope_tol"]))

    x_budget = budgets["x_norm_per_m0"] * m0
    rows.append(_row("ns-x-norm", f"<= {_fmt(x_budget)}", report.x_norm, None,
                     report.x_norm <= x_budget))

    field_rms = max(f.rms() for f in result.final.fields)
    div_rel = result.divergence_rms / max(field_rms, 1e-300)
    rows.append(_row("ns-solenoidality", "<= 1e-10", div_rel, None,
                     div_rel <= 1e-10))

    env = analysis.envelope_of_trajectory(result.final, pcfg.alpha)
    rows.append(_bound_row(env))

    weights = x_weights(report.times, pcfg.alpha, pcfg.q, pcfg.log_power)
    ledger_rows = [[result.iterations, t,
                    report.series["lq"][i], report.series["linf"][i],
                    report.series["grad_l3"][i], weights["lq"][i],
                    weights["linf"][i], weights["grad_l3"][i]]
                   for i, t in enumerate(report.times)]
    out.table("ns-trajectory",
              ["m", "t", "lq_norm", "linf_norm", "grad_l3_norm",
               "x_weight_lq", "x_weight_linf", "x_weight_grad"], ledger_rows)

    if cfg.dump_fields:
        write_field(result.final.fields[-1],
                    str(out.outdir / "ns-final-last.field"))

    out.json("navier-stokes", {
        "alpha": pcfg.alpha, "q": pcfg.q, "m0": m0,
        "grid": {"resolution": spec.resolution, "half_width": spec.half_width},
        "converged": result.converged, "diverged": result.diverged,
        "iterations": result.iterations, "diff_norms": result.diff_norms,
        "ratios": result.ratios, "iterate_x_norms": result.iterate_x_norms,
        "x_norm": report.x_norm, "channels": report.channels,
        "attained_at": report.attained_at,
        "duhamel_error": result.duhamel_error,
        "divergence_rms_rel": div_rel,
        "linf_slope": fit.slope if fit is not None else None,
        "runtime_s": round(time.time() - start, 3)})

    if not result.converged:
        raise SolverError(
            f"iteration did not contract at m0={m0:g}; rerun "
            f"calibrate-threshold to refresh the smallness threshold")
    return rows


class SolverError(RuntimeError):
    pass


def list_certify_inequalities(cfg):
    prof = _profile(cfg)
    names = ["time-integral-a-gt-1", "time-integral-a-eq-1",
             "time-integral-a-eq-1-log2", "time-integral-a-lt-1",
             "time-integral-a-lt-1-log", "convolution-tail-bound",
             "convolution-tail-bound-sweep", "convolution-b-scaling"]
    for a in prof["envelope_alphas"]:
        names += [f"heat-envelope-alpha-{a:g}", f"heat-envelope-slope-alpha-{a:g}"]
    names += ["pointwise-envelope-alpha-1-delta-0",
              "pointwise-envelope-alpha-2-delta-0",
              "pointwise-envelope-alpha-3-delta-0.1"]
    return names


def cmd_certify_inequalities(cfg: RunConfig, out: Output):
    start = time.time()
    prof = _profile(cfg)
    rows, reports = [], []

    for a, alpha in ((2.0, 1.0), (1.0, 1.0), (1.0, 3.0), (0.75, 1.0),
                     (0.75, 3.0)):
        rep = analysis.certify_time_integral(a, alpha)
        rows.append(_bound_row(rep))
        reports.append(rep.as_dict())

    rep = analysis.certify_convolution_bound(a=2.0, b=4.0)
    rows.append(_bound_row(rep))
    reports.append(rep.as_dict())

    if prof["sweep_values"] >= 5:
        sweep = analysis.convolution_sweep()
    else:
        sweep = analysis.convolution_sweep(a_values=(0.5, 1.5, 2.5),
                                           b_values=(3.5, 4.5, 6.0),
                                           B_values=(0.5, 2.0, 8.0))
    rows.append(_bound_row(sweep))
    reports.append(sweep.as_dict())

    measured, predicted, rel = analysis.convolution_scaling_check()
    rows.append(_row("convolution-b-scaling", predicted, measured, 0.2,
                     rel <= 0.2))

    for a in prof["envelope_alphas"]:
        env = analysis.verify_heat_envelope(RadialProfile(alpha=a))
        rows.append(_bound_row(env.report))
        predicted = -a / 2.0
        rows.append(_row(f"heat-envelope-slope-alpha-{a:g}", predicted,
                         env.fit.slope, 0.05,
                         abs(env.fit.slope - predicted) <= 0.05))
        reports.append({**env.report.as_dict(),
                        "slope": env.fit.slope,
                        "growth_trend_raw": env.growth_trend_raw,
                        "growth_trend_compensated": env.growth_trend_compensated})

    for alpha, delta in ((1.0, 0.0), (2.0, 0.0), (3.0, 0.1)):
        rep = analysis.pointwise_envelope_oracle(RadialProfile(alpha=alpha),
                                                 delta=delta)
        rows.append(_bound_row(rep))
        reports.append(rep.as_dict())

    out.json("certify-inequalities", {
        "reports": reports, "runtime_s": round(time.time() - start, 3)})
    return rows


def list_representation_check(cfg):
    return ["representation-residual", "whole-space-residual"]


def cmd_representation_check(cfg: RunConfig, out: Output):
    start = time.time()
    from .representation import representation_report, whole_space_check
    rep = representation_report()
    rows = [_row("representation-residual", "<= 0.01", rep.max_residual, None,
                 rep.max_residual <= 1e-2)]
    ws = whole_space_check()
    rows.append(_row("whole-space-residual", "<= 1e-06", ws, None, ws <= 1e-6))
    out.table("representation-residuals",
              ["x1", "x2", "x3", "residual"],
              [[*p, r] for p, r in zip(rep.probes, rep.residuals)])
    out.json("representation-check", {
        "t": rep.t, "residuals": rep.residuals, "max_residual": rep.max_residual,
        "whole_space_residual": ws,
        "runtime_s": round(time.time() - start, 3)})
    return rows


def list_calibrate_threshold(cfg):
    return ["m0-threshold"]


def cmd_calibrate_threshold(cfg: RunConfig, out: Output):
    start = time.time()
    prof = _profile(cfg)
    budgets = load_budgets()["picard"]
    frozen = budgets[f"m0_threshold_{cfg.profile}"]
    spec = GridSpec(half_width=cfg.half_width or prof["ns_half_width"],
                    resolution=cfg.resolution or prof["ns_resolution"])
    pcfg = PicardConfig(alpha=cfg.alpha, q=cfg.q, m0=frozen, spec=spec,
                        t_max=min(16.0, cfg.t_max or prof["ns_t_max"]),
                        max_iter=4, conv_tol=cfg.conv_tol)
    times = default_time_grid(pcfg.t_max)
    found = threshold_bisection(pcfg, lo=frozen / 4.0, hi=frozen * 4.0,
                                steps=6, times=times)
    ratio = found / frozen
    rows = [_row("m0-threshold", frozen, found, "factor 2",
                 0.5 <= ratio <= 2.0)]
    out.json("calibrate-threshold", {
        "frozen": frozen, "measured": found, "ratio": ratio,
        "grid": {"resolution": spec.resolution, "half_width": spec.half_width},
        "runtime_s": round(time.time() - start, 3)})
    return rows


COMMANDS = {
    "verify-kernels": (cmd_verify_kernels, list_verify_kernels),
    "heat-decay": (cmd_heat_decay, list_heat_decay),
    "gradient-decay": (cmd_gradient_decay, list_gradient_decay),
    "navier-stokes": (cmd_navier_stokes, list_navier_stokes),
    "certify-inequalities": (cmd_certify_inequalities, list_certify_inequalities),
    "representation-check": (cmd_representation_check, list_representation_check),
    "calibrate-threshold": (cmd_calibrate_threshold, list_calibrate_threshold),
}

_ALL_ORDER = ["verify-kernels", "heat-decay", "gradient-decay",
              "navier-stokes", "certify-inequalities", "representation-check"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="decay-lab",
        description="Numerical verification suite for slow-decay viscous flow")
    parser.add_argument("command", choices=sorted(COMMANDS) + ["all"])
    parser.add_argument("--config", default=None, help="flat key=value file")
    parser.add_argument("--out", default="decay-lab-out",
                        help="output directory")
    parser.add_argument("--list", action="store_true",
                        help="print the check ids this command would run")
    args, extra = parser.parse_known_args(argv)

    try:
        overrides = {}
        for item in extra:
            if not item.startswith("--") or "=" not in item:
                raise ConfigError(f"unrecognized argument {item!r}; "
                                  "overrides look like --key=value")
            key, _, val = item[2:].partition("=")
            overrides[key] = val
        file_values = load_config(args.config) if args.config else {}
        cfg = build_config(file_values, overrides)
        _profile(cfg)
        if cfg.budgets:
            use_budgets_file(cfg.budgets)
    except (ConfigError, OSError) as exc:
        print(f"decay-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE

    names = _ALL_ORDER if args.command == "all" else [args.command]
    if args.list:
        for name in names:
            for check in COMMANDS[name][1](cfg):
                print(check)
        return EXIT_OK

    out = Output(Path(args.out))
    rows = []
    solver_failed = False
    try:
        for name in names:
            try:
                rows.extend(COMMANDS[name][0](cfg, out))
            except SolverError as exc:
                print(f"decay-lab {name}: {exc}", file=sys.stderr)
                solver_failed = True
    finally:
        use_budgets_file(None)
    out.summary(rows)

    for r in rows:
        status = "pass" if r["pass"] else "FAIL"
        print(f"{r['check']}: {status} ({_fmt(r['measured'])})")
    if solver_failed:
        return EXIT_SOLVER
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
