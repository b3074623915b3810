"""Graphical mean curvature flow with oblique (contact angle) boundary data.

Heights are graphs over 1D/2D domains in a product manifold; the package
integrates the nonparametric flow, solves directly for translating profiles,
and monitors the geometric invariants (maximum principle, energy dissipation,
isoperimetric obstructions).
"""

from .errors import (BlowUpError, ConfigurationError, EstimationError,
                     OracleError, SolverError)
from .metrics import MetricField, make_metric, metric_at
from .grid import DomainGrid, DomainSpec, build_grid
from .operators import (ContactAngle, GraphState, compute_w, compute_w_from_u,
                        evaluate_rhs, gradient, mean_curvature_op,
                        oblique_bc_closure)
from .flow import (FlowIntegrator, FlowParams, Trajectory, cfl_dt,
                   estimate_speed, run_flow, step, surface_energy)
from .translator import (TranslatorSolution, TranslatorSolver,
                         continuation_solve, solve_pinned, solve_regularized,
                         speed_quadrature, uniqueness_probe)
from .diagnostics import (RunReport, Verdict, cheeger_ratio,
                          energy_identity_residual, gradient_bound_monitor,
                          inf_H_inequality, monitor_ut_max)
from .exact import ExactSolution, grim_reaper, highres_reference, tilted_minimal
from .config import ScenarioConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "ConfigurationError", "EstimationError", "OracleError",
    "SolverError", "MetricField", "make_metric", "metric_at", "DomainGrid",
    "DomainSpec", "build_grid", "ContactAngle", "GraphState", "compute_w",
    "compute_w_from_u", "evaluate_rhs", "gradient", "mean_curvature_op",
    "oblique_bc_closure", "FlowIntegrator", "FlowParams", "Trajectory",
    "cfl_dt", "estimate_speed", "run_flow", "step", "surface_energy",
    "TranslatorSolution", "TranslatorSolver", "continuation_solve",
    "solve_pinned", "solve_regularized", "speed_quadrature",
    "uniqueness_probe", "RunReport", "Verdict", "cheeger_ratio",
    "energy_identity_residual", "gradient_bound_monitor", "inf_H_inequality",
    "monitor_ut_max", "ExactSolution", "grim_reaper", "highres_reference",
    "tilted_minimal", "ScenarioConfig", "parse_config",
]
