"""Runge-Kutta convolution quadrature FEM-BEM solver for the Schroedinger equation
on unbounded domains."""
import os as _os

# SCHROCQ_THREADS caps BLAS and numba threads; it must be set before numpy loads
_threads = _os.environ.get("SCHROCQ_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
