"""Per-step norms, energies and errors of a computed history."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fem import InteriorForms, h1_seminorm_error, l2_error


@dataclass
class Monitors:
    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    h1: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    l2_error: list = field(default_factory=list)
    h1_error: list = field(default_factory=list)

    @property
    def max_l2_error(self) -> float:
        return max(self.l2_error) if self.l2_error else float("nan")

    @property
    def max_h1_error(self) -> float:
        return max(self.h1_error) if self.h1_error else float("nan")

    def non_expansive(self, rtol: float = 1e-10) -> bool:
        """||u^n|| <= ||u^0|| (1 + rtol) for every n."""
        return bool(np.all(np.asarray(self.l2) <= self.l2[0] * (1 + rtol)))

    def rows(self):
        nan = float("nan")
        for n, t in enumerate(self.times):
            yield (n, t, self.l2[n], self.h1[n], self.energy[n],
                   self.l2_error[n] if self.l2_error else nan,
                   self.h1_error[n] if self.h1_error else nan)


def _quad(A, u) -> float:
    return float(np.real(np.vdot(u, A @ u)))


def run_monitors(hist, forms: InteriorForms, k: float, exact=None, exact_grad=None) -> Monitors:
    """Norms of every step value u^n; errors when an exact solution is given.

    ``exact(x, t)`` and ``exact_grad(x, t)`` take arrays of points.
    """
    mon = Monitors()
    mesh = forms.mesh
    for n, u in enumerate(hist.u):
        t = n * k
        l2sq = max(_quad(forms.M, u), 0.0)
        grad_sq = max(_quad(forms.S, u), 0.0)
        mon.times.append(t)
        mon.l2.append(np.sqrt(l2sq))
        mon.h1.append(np.sqrt(l2sq + grad_sq))
        mon.energy.append(grad_sq + _quad(forms.MV, u))
        if exact is not None:
            e0 = l2_error(mesh, u, exact, t)
            mon.l2_error.append(e0)
            if exact_grad is not None:
                mon.h1_error.append(float(np.hypot(e0, h1_seminorm_error(mesh, u, exact_grad, t))))
    return mon
