"""Coupled stage systems, time marching, closures and monitors."""
from .bem import (BemBoundary, ExplicitWeightBoundary, ExteriorField, OperatorWeights,
                  precompute_operator_weights, recover_exterior)
from .drivers import Solution, solve_1d, solve_3d
from .dtn import DtnBoundary
from .monitors import Monitors, run_monitors
from .system import (CoupledStepSystem, StepSolveError, TimeHistory, advance_step, march,
                     start_history)

__all__ = [
    "BemBoundary", "ExplicitWeightBoundary", "ExteriorField", "OperatorWeights",
    "precompute_operator_weights", "recover_exterior", "Solution", "solve_1d", "solve_3d",
    "DtnBoundary", "Monitors", "run_monitors", "CoupledStepSystem", "StepSolveError",
    "TimeHistory", "advance_step", "march", "start_history",
]
