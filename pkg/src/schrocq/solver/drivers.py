"""Whole-run drivers for the two backends.

``config`` is any object with the fields of harness.RunConfig (backend,
tableau, k, N, Q, V0, mesh, order, monitor_points) and the methods
initial_condition() and exact_solution().
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cq import CqContext
from ..fem import assemble_interior, build_box_mesh, build_interval_mesh, interpolate
from ..tableaus import builtin_tableau
from .bem import BemBoundary, ExteriorField, recover_exterior
from .dtn import DtnBoundary
from .monitors import Monitors, run_monitors
from .system import CoupledStepSystem, TimeHistory, march


@dataclass
class Solution:
    monitors: Monitors
    history: TimeHistory
    ctx: CqContext
    forms: object
    exterior: ExteriorField | None = None
    assemblies: int = 0


def _context(config) -> CqContext:
    return CqContext.create(builtin_tableau(config.tableau), config.k, config.N,
                            Q=config.Q, V0=config.V0)


def _finish(config, ctx, forms, system, exterior_mesh=None) -> Solution:
    u0 = interpolate(forms.mesh, config.initial_condition())
    hist = march(system, u0, config.N)
    exact = config.exact_solution()
    u, grad = exact if exact is not None else (None, None)
    mon = run_monitors(hist, forms, config.k, u, grad)
    ext = None
    if exterior_mesh is not None and len(config.monitor_points):
        ext = recover_exterior(hist, ctx, exterior_mesh, np.asarray(config.monitor_points, float))
    asm = getattr(system.boundary, "assemblies", 0)
    return Solution(mon, hist, ctx, forms, ext, asm)


def solve_1d(config) -> Solution:
    """Interval (a, b) with the transparent closure d_n U + B(d_t) U = 0."""
    mesh = build_interval_mesh(config.mesh.a, config.mesh.b, config.mesh.n)
    forms = assemble_interior(mesh, config.V0)
    ctx = _context(config)
    system = CoupledStepSystem(ctx, forms, DtnBoundary(ctx))
    return _finish(config, ctx, forms, system)


def solve_3d(config) -> Solution:
    """Cube with the boundary element closure; exterior values at the monitor points."""
    mesh = build_box_mesh(config.mesh.center, config.mesh.side, config.mesh.subdivisions)
    forms = assemble_interior(mesh, config.V0)
    ctx = _context(config)
    system = CoupledStepSystem(ctx, forms, BemBoundary(ctx, mesh.surface, order=config.order))
    return _finish(config, ctx, forms, system, mesh.surface)
