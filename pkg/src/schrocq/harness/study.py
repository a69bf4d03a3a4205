"""Refinement studies and observed orders."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig

log = logging.getLogger(__name__)

MODES = ("time", "simultaneous")
# L2 order gates for time-only studies; other tableaus are trend-only
ORDER_GATES = {"radau_iia_1": 1.0, "gauss1": 2.0, "radau_iia_2": 3.0}
ORDER_SLACK = 0.3


def successive_orders(errors) -> list[float]:
    e = np.asarray(errors, dtype=float)
    return [float(np.log2(e[i] / e[i + 1])) for i in range(len(e) - 1)]


def fitted_order(errors) -> float:
    """Least-squares slope of -log2(e_j) against the level j."""
    e = np.asarray(errors, dtype=float)
    j = np.arange(e.size)
    return float(-np.polyfit(j, np.log2(e), 1)[0])


@dataclass
class StudyRow:
    level: int
    h: float
    k: float
    N: int
    max_l2_error: float
    max_h1_error: float
    runtime: float
    non_expansive: bool = True
    failure: str | None = None


@dataclass
class ConvergenceReport:
    mode: str
    tableau: str
    rows: list = field(default_factory=list)

    def errors(self, which: str = "l2") -> list[float]:
        return [getattr(r, f"max_{which}_error") for r in self.rows]

    @property
    def complete(self) -> bool:
        return all(r.failure is None for r in self.rows)

    def successive_orders(self, which: str = "l2"):
        if len(self.rows) < 3 or not self.complete:
            return None
        return successive_orders(self.errors(which))

    def fitted_order(self, which: str = "l2"):
        if len(self.rows) < 3 or not self.complete:
            return None
        return fitted_order(self.errors(which))

    def decreasing(self, which: str = "l2") -> bool:
        e = self.errors(which)
        return self.complete and all(b < a for a, b in zip(e, e[1:]))

    def gates(self) -> dict:
        out = {"complete": self.complete,
               "non_expansive": all(r.non_expansive for r in self.rows),
               "l2_decreasing": self.decreasing("l2")}
        q = ORDER_GATES.get(self.tableau)
        if self.mode == "time" and q is not None:
            p = self.fitted_order("l2")
            out["l2_order"] = p is not None and p >= q - ORDER_SLACK
        return out

    @property
    def passed(self) -> bool:
        return all(self.gates().values())

    def table(self) -> str:
        lines = ["level,h,k,N,max_l2_error,max_h1_error,runtime_s,non_expansive,failure"]
        for r in self.rows:
            lines.append(f"{r.level},{r.h:.17g},{r.k:.17g},{r.N},{r.max_l2_error:.17g},"
                         f"{r.max_h1_error:.17g},{r.runtime:.3f},{int(r.non_expansive)},"
                         f"{r.failure or ''}")
        for which in ("l2", "h1"):
            so, fo = self.successive_orders(which), self.fitted_order(which)
            if so is not None:
                lines.append(f"# {which} successive orders: " + " ".join(f"{x:.3f}" for x in so))
                lines.append(f"# {which} fitted order: {fo:.3f}")
        return "\n".join(lines)


def refine_config(base: RunConfig, level: int, mode: str) -> RunConfig:
    f = 2 ** level
    changes = {"k": base.k / f, "N": base.N * f, "output": None}
    if base.Q is not None:
        changes["Q"] = base.Q * f
    if mode == "simultaneous":
        changes["mesh"] = base.mesh.refined(f)
    return base.with_(**changes)


def convergence_study(base: RunConfig, refinements: int, mode: str = "time", runner=None) -> ConvergenceReport:
    """Halve k (and h in simultaneous mode) ``refinements - 1`` times."""
    mode = "time" if mode == "time-only" else mode
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if refinements < 1:
        raise ValueError("need at least one level")
    if runner is None:
        from .run import run as runner
    report = ConvergenceReport(mode, base.tableau)
    for level in range(refinements):
        cfg = refine_config(base, level, mode)
        t0 = time.perf_counter()
        try:
            res = runner(cfg)
        except Exception as exc:  # annotate and continue with the next level
            log.warning("level %d failed: %s", level, exc)
            report.rows.append(StudyRow(level, cfg.mesh.h, cfg.k, cfg.N, math.nan, math.nan,
                                        time.perf_counter() - t0, False, f"{type(exc).__name__}: {exc}"))
            continue
        m = res.monitors
        report.rows.append(StudyRow(level, cfg.mesh.h, cfg.k, cfg.N, m.max_l2_error, m.max_h1_error,
                                    time.perf_counter() - t0, m.non_expansive()))
    return report
