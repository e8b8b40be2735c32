"""Selecting the best optimizing system.

Fixed-budget selection among ``K`` systems whose merit is the optimal value
of an inner stochastic optimization problem. The package provides sequential
elimination with SGD or SAA inner engines, uniform allocation and
grid-discretized OCBA, three application families plus calibration
instances, and a replication harness for probability of correct selection.
"""

from .harness import (ExperimentPlan, InstanceDiagnostics, InstanceSpec, PfsEstimate, build_family,
                      derive_stream, diagnostics, run_experiment)
from .inner import (FeasibleBox, SampleStore, SgdState, ValueEstimate, fd_gradient, run_sgd_phase,
                    sgd_step, solve_saa)
from .selection import (ConfigurationError, EliminationState, OcbaConfig, SelectionOutcome, SeoConfig,
                        halve, phase_budget, phase_schedule, run_ocba, run_seo_saa, run_seo_sgd,
                        run_uniform, select)

__version__ = "0.1.0"

__all__ = [
    "ExperimentPlan", "InstanceDiagnostics", "InstanceSpec", "PfsEstimate", "build_family",
    "derive_stream", "diagnostics", "run_experiment",
    "FeasibleBox", "SampleStore", "SgdState", "ValueEstimate", "fd_gradient", "run_sgd_phase",
    "sgd_step", "solve_saa",
    "ConfigurationError", "EliminationState", "OcbaConfig", "SelectionOutcome", "SeoConfig",
    "halve", "phase_budget", "phase_schedule", "run_ocba", "run_seo_saa", "run_seo_sgd", "run_uniform", "select",
]
