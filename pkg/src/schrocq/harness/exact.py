"""Free Gaussian beams: exact solutions of i u_t + Laplace u = 0."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PREFACTOR = (2.0 / np.pi) ** 0.25


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1:
        return x.reshape(x.shape + (1,)) if x.ndim == 0 or x.shape[-1:] != (1,) else x
    return x


def exact_gaussian_beam(x, t, x_c, p0, d: int = 3):
    """u(x, t) for u(x, 0) = (2/pi)^{1/4} exp(-|x - x_c|^2 + i p0 . (x - x_c)).

    ``x`` is a point or an array of points (last axis of length d; scalars
    are accepted for d = 1).  The amplitude factor sqrt(i / (i - 4t)) is
    raised to the power d so that every dimension spreads independently.
    """
    if d not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    x_c = np.broadcast_to(np.asarray(x_c, dtype=float), (d,))
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), (d,))
    den = -4.0 * t + 1j
    y = x - x_c
    r2 = np.sum(y * y, axis=-1)
    expo = (-1j * r2 - y @ p0 + (p0 @ p0) * t) / den
    return PREFACTOR * np.sqrt(1j / den) ** d * np.exp(expo)


def exact_gaussian_beam_grad(x, t, x_c, p0, d: int = 3):
    """Spatial gradient of exact_gaussian_beam, shape (..., d)."""
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    x_c = np.broadcast_to(np.asarray(x_c, dtype=float), (d,))
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), (d,))
    u = exact_gaussian_beam(x, t, x_c, p0, d)
    den = -4.0 * t + 1j
    return u[..., None] * (-2j * (x - x_c) - p0) / den


@dataclass(frozen=True)
class Beam:
    center: tuple
    p0: tuple


def superposition(beams, d: int):
    """Exact solution and gradient callables (x, t) for a sum of beams."""

    def u(x, t):
        return sum(exact_gaussian_beam(x, t, b.center, b.p0, d) for b in beams) if beams else \
            np.zeros(np.asarray(x).shape[:-1] if d > 1 else np.shape(x), complex)

    def grad(x, t):
        shape = (np.asarray(x).shape[:-1] if d > 1 else np.shape(x)) + (d,)
        out = np.zeros(shape, complex)
        for b in beams:
            out = out + exact_gaussian_beam_grad(x, t, b.center, b.p0, d)
        return out

    return u, grad


def pde_residual(x, t, x_c, p0, d: int = 1, step: float = 1e-4) -> float:
    """|i u_t + Laplace u| by centered finite differences."""
    f = lambda xx, tt: exact_gaussian_beam(xx, tt, x_c, p0, d)
    x = np.asarray(x, dtype=float).reshape(d)
    ut = (f(x, t + step) - f(x, t - step)) / (2 * step)
    lap = 0.0
    for a in range(d):
        e = np.zeros(d)
        e[a] = step
        lap = lap + (f(x + e, t) - 2 * f(x, t) + f(x - e, t)) / step ** 2
    return float(abs(1j * ut + lap))
