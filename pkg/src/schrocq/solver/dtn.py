"""1D transparent closure: d_n U + B(d_t) U = 0 at both interval ends.

On a half line the exterior Dirichlet-to-Neumann map of -d_xx + V0 at the
matrix frequency is B itself, so the closure needs only the m x m scalar
convolution weights of B(z).
"""
from __future__ import annotations

import numpy as np

from ..cq import CqContext, ScalarSymbol, cq_weights
from .system import TimeHistory


class DtnBoundary:
    n_trace = 2
    n_density = 0

    def __init__(self, ctx: CqContext):
        self.ctx = ctx
        if ctx.N >= 1:
            self.weights = cq_weights(ctx, ScalarSymbol(lambda s: s, "B"), mode="compose").weights
        else:
            self.weights = np.zeros((1, ctx.tableau.m, ctx.tableau.m), complex)

    def j0_blocks(self, index: int, beta: complex):
        z = np.zeros((2, 0), complex)
        return beta * np.eye(2), z, z.T, np.zeros((0, 0), complex)

    def history(self, hist: TimeHistory, n: int):
        m = self.ctx.tableau.m
        h = np.zeros((m, 2), complex)
        for j in range(1, n + 1):
            h += self.weights[j] @ hist.traces[n - j]
        return h, np.zeros((m, 0), complex)
