"""Numerical laboratory for decay rates of viscous incompressible flow with
slowly decaying initial data.

Layers, bottom up: closed-form kernels (`kernels`), quadrature oracles for
radial heat flow (`oracle`), swirl initial data (`initial_data`), periodic
spectral transport (`grid`, `semigroup`), the nonlinear iteration (`picard`),
decay certification (`analysis`, `reports`), and an integral-identity
cross-check (`representation`).  The `decay-lab` entry point in `cli` drives
everything from flat configs.
"""
from .analysis import (certify_convolution_bound, certify_time_integral,
                       critical_log_dichotomy, expected_heat_slope,
                       heat_norm_decay, pointwise_envelope_oracle,
                       verify_heat_envelope)
from .budgets import load_budgets, save_budgets, use_budgets_file
from .grid import GridField, GridSpec, read_field, scalar_field, write_field
from .initial_data import (InitialField, RadialProfile, effective_m0,
                           make_slow_decay_field, sample_to_grid)
from .kernels import (grad_heat_kernel, heat_kernel, heat_potential,
                      kernel_envelope_report, oseen_tensor)
from .oracle import (heat_potential_oracle, radial_heat_gradient,
                     radial_heat_value, radial_lq_norm, scalar_heat_series)
from .picard import (PicardConfig, PicardResult, Trajectory,
                     bilinear_decay_probe, contraction_ratio, decay_norm,
                     picard_run, smallness_response, threshold_bisection)
from .reports import BoundReport, DecaySeries, ExponentFit, fit_decay_exponent
from .representation import RepresentationCheck, representation_report
from .semigroup import (NormProbe, TruncationError, duhamel_convolve,
                        heat_evolve, heat_series, leray_project)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
