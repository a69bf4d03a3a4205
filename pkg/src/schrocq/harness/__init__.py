"""Configuration, exact solutions, run and study drivers, self-tests and CLI."""
from .config import (PRESETS, ConfigError, CubeSpec, IntervalSpec, RunConfig, load_config,
                     preset)
from .exact import Beam, exact_gaussian_beam, exact_gaussian_beam_grad, pde_residual, superposition
from .run import CSV_COLUMNS, RunResult, monitors_csv, run, write_csv
from .selftests import calderon_selftest, exact_weights, weights_selftest
from .study import ConvergenceReport, StudyRow, convergence_study, fitted_order, successive_orders

__all__ = [
    "PRESETS", "ConfigError", "CubeSpec", "IntervalSpec", "RunConfig", "load_config", "preset",
    "Beam", "exact_gaussian_beam", "exact_gaussian_beam_grad", "pde_residual", "superposition",
    "CSV_COLUMNS", "RunResult", "monitors_csv", "run", "write_csv",
    "calderon_selftest", "exact_weights", "weights_selftest",
    "ConvergenceReport", "StudyRow", "convergence_study", "fitted_order", "successive_orders",
]
