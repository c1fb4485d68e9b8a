"""Kernel dispatch: numba when available, numpy otherwise."""

import numpy as np

from .. import _config
from . import _numpy

numpy_impl = _numpy
numba_impl = None

if not _config.PURE_NUMPY:
    try:
        from . import _numba as numba_impl
    except ImportError:  # numba missing or broken
        numba_impl = None

impl = numba_impl if numba_impl is not None else numpy_impl
BACKEND = "numba" if impl is numba_impl else "numpy"


def _f(a):
    return np.ascontiguousarray(np.atleast_2d(a), dtype=float)


def laplacian_batch(indptr, indices, weights, mu, F):
    return impl.laplacian_batch(indptr, indices, weights, mu, _f(F))


def gamma_batch(indptr, indices, weights, mu, F, G):
    F, G = np.broadcast_arrays(_f(F), _f(G))
    return impl.gamma_batch(indptr, indices, weights, mu, _f(F), _f(G))


def reduced_objective(S, *args):
    return impl.reduced_objective(_f(S), *args)


def cut_enumerate(indptr, indices, weights, mu):
    return impl.cut_enumerate(indptr, indices, weights, mu)


def cde_multistart(S0, betas, iters, lo, hi, *args):
    return impl.cde_multistart(_f(S0), np.asarray(betas, dtype=float), int(iters), float(lo), float(hi), *args)
