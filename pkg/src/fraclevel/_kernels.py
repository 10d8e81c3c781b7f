"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import from ``FRACLEVEL_BACKEND``:

* ``auto`` (default): numba if importable, numpy otherwise,
* ``numba``: require numba, raise if missing,
* ``numpy``: force the vectorized fallback.

Both implementations of each kernel are importable directly so the test
suite and ``benchmarks/bench_kernels.py`` can compare them.
"""

import math
import os

import numpy as np

from .errors import UsageError
from .gammafn import gamma, rgamma, sinpi

_ENV_FLAG = "FRACLEVEL_BACKEND"


def _resolve_backend() -> str:
    want = os.environ.get(_ENV_FLAG, "auto").strip().lower()
    if want not in ("auto", "numba", "numpy"):
        raise UsageError(f"{_ENV_FLAG} must be auto|numba|numpy, got {want!r}")
    if want == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        if want == "numba":
            raise UsageError(f"{_ENV_FLAG}=numba but numba is not installed")
        return "numpy"


BACKEND = _resolve_backend()


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def weighted_conv_numpy(f: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """out[i] = sum_{j<i} ( f[i-j]*P[j] + f[i-1-j]*Q[j] ), out[0] = 0.

    P, Q have length n-1 (one entry per grid panel).  This is the shared
    inner sum of every product-integration operator in grid_calculus.
    """
    n = f.shape[0]
    out = np.zeros(n)
    c1 = np.convolve(f, P)
    c2 = np.convolve(f, Q)
    i = np.arange(1, n)
    out[1:] = c1[1:n] + c2[0:n - 1]
    # c1[i] counts the j=i pair f[0]*P[i], which the sum excludes
    mask = i <= n - 2
    out[1:][mask] -= f[0] * P[i[mask]]
    return out


def ml_series_numpy(z: np.ndarray, rg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate sum_k z**k * rg[k] for each z; also return max |term|.

    ``rg[k]`` holds 1/Gamma(rho*k + nu).  numpy's pairwise summation keeps
    the rounding of the alternating sums benign; the max-term channel lets
    the caller audit cancellation after the fact.
    """
    nz = z.shape[0]
    nk = rg.shape[0]
    zk = np.ones(nz)
    terms = np.empty((nk, nz))
    terms[0] = rg[0]
    for k in range(1, nk):
        zk = zk * z
        terms[k] = zk * rg[k]
    return terms.sum(axis=0), np.abs(terms).max(axis=0)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _weighted_conv_nb(f, P, Q):
        n = f.shape[0]
        out = np.zeros(n)
        for i in range(1, n):
            acc = 0.0
            for j in range(i):
                acc += f[i - j] * P[j] + f[i - 1 - j] * Q[j]
            out[i] = acc
        return out

    @njit(cache=True)
    def _ml_series_nb(z, rg):
        nz = z.shape[0]
        nk = rg.shape[0]
        vals = np.empty(nz)
        maxterm = np.empty(nz)
        for i in range(nz):
            zi = z[i]
            s = rg[0]
            comp = 0.0          # Kahan compensation
            mt = abs(rg[0])
            zk = 1.0
            for k in range(1, nk):
                zk *= zi
                t = zk * rg[k]
                at = abs(t)
                if at > mt:
                    mt = at
                y = t - comp
                tot = s + y
                comp = (tot - s) - y
                s = tot
            vals[i] = s
            maxterm[i] = mt
        return vals, maxterm

    def weighted_conv(f, P, Q):
        return _weighted_conv_nb(np.ascontiguousarray(f),
                                 np.ascontiguousarray(P),
                                 np.ascontiguousarray(Q))

    def ml_series(z, rg):
        return _ml_series_nb(np.ascontiguousarray(z), np.ascontiguousarray(rg))

else:
    weighted_conv = weighted_conv_numpy
    ml_series = ml_series_numpy


__all__ = [
    "BACKEND",
    "gamma", "rgamma", "sinpi",
    "weighted_conv", "weighted_conv_numpy",
    "ml_series", "ml_series_numpy",
]
