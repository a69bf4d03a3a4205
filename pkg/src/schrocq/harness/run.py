"""Single runs: backend dispatch, per-step CSV and a summary line."""
from __future__ import annotations

import io
import time
from dataclasses import dataclass

import numpy as np

from ..solver import Monitors, Solution, solve_1d, solve_3d
from .config import TAIL_THRESHOLD, RunConfig

CSV_COLUMNS = ("n", "t", "l2_norm", "h1_norm", "energy", "l2_error", "h1_error")


def _fmt(x) -> str:
    return "%.17g" % x


def monitors_csv(monitors: Monitors) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in monitors.rows():
        buf.write(",".join([str(row[0])] + [_fmt(v) for v in row[1:]]) + "\n")
    return buf.getvalue()


def write_csv(path, monitors: Monitors) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(monitors_csv(monitors))


@dataclass
class RunResult:
    config: RunConfig
    solution: Solution
    runtime: float
    tail: float

    @property
    def monitors(self) -> Monitors:
        return self.solution.monitors

    @property
    def non_expansive(self) -> bool:
        return self.monitors.non_expansive()

    @property
    def finite(self) -> bool:
        m = self.monitors
        return bool(np.all(np.isfinite(m.l2 + m.h1 + m.energy)))

    @property
    def max_exterior(self) -> float:
        ext = self.solution.exterior
        return float(np.abs(ext.stages).max()) if ext is not None and ext.stages.size else float("nan")

    @property
    def passed(self) -> bool:
        return self.finite and self.non_expansive

    def summary(self) -> str:
        m = self.monitors
        c = self.config
        l2 = np.asarray(m.l2)
        ratio = float(l2.max() / l2[0]) if l2[0] > 0 else float("nan")
        parts = [
            f"backend={c.backend}", f"tableau={c.tableau}", f"k={c.k:g}", f"N={c.N}",
            f"h={c.mesh.h:g}", f"max_l2_error={m.max_l2_error:.6e}",
            f"max_h1_error={m.max_h1_error:.6e}", f"max_norm_ratio={ratio:.15f}",
            f"non_expansive={'yes' if self.non_expansive else 'no'}",
            f"boundary_tail={self.tail:.3e}",
        ]
        if self.tail > TAIL_THRESHOLD:
            parts.append("tail_warning=yes")
        if self.solution.exterior is not None:
            parts.append(f"max_exterior={self.max_exterior:.6e}")
        parts.append(f"runtime_s={self.runtime:.2f}")
        return "summary " + " ".join(parts)


def run(config: RunConfig, output=None) -> RunResult:
    """Execute the configured backend; write the CSV to ``output`` or config.output."""
    t0 = time.perf_counter()
    sol = solve_1d(config) if config.backend == "1d" else solve_3d(config)
    res = RunResult(config, sol, time.perf_counter() - t0, config.boundary_tail())
    path = output if output is not None else config.output
    if path:
        write_csv(path, sol.monitors)
    return res
