"""Quadrature-based fractional operators on uniformly sampled functions.

Everything here reduces to one product-integration primitive: the
piecewise-linear reconstruction of both factors of a Laplace convolution
integrated exactly against a power weight ``sigma**alpha`` per panel.
Naive quadrature loses its order against the weakly singular kernel
``(t - tau)**(rho - 1)``, so the weight's panel moments are computed in
closed form (binomial series in ``h/t_j`` away from the origin, direct
differences near it, both branches stable to ~1e-15).

Node 0 of a :class:`GridFn` may carry an IEEE infinity as the limit
marker of a genuinely singular endpoint; operators then fall back to
linear extrapolation of the first interior samples for that one panel
endpoint, which is what degrades the (deliberately loose) tolerances of
the singular-input examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import weighted_conv
from .errors import DomainError, NumericalFailureError, UsageError
from .gammafn import gamma

__all__ = [
    "GridFn", "rl_integral_grid", "rl_derivative_grid", "ddt_grid",
    "boundary_functional", "convolve", "convolve_power_weighted",
    "read_grid_csv", "write_grid_csv",
]


@dataclass(frozen=True)
class GridFn:
    """Samples on the uniform nodes t_j = j * t_max/(n-1), j = 0..n-1."""
    samples: np.ndarray
    t_max: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise UsageError("a grid function needs at least 2 samples")
        if not self.t_max > 0.0:
            raise UsageError(f"t_max must be positive, got {self.t_max}")
        if not np.all(np.isfinite(arr[1:])):
            raise UsageError("samples must be finite away from node 0")
        if np.isnan(arr[0]):
            raise UsageError("node 0 must be a number or an IEEE infinity marker")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def h(self) -> float:
        return self.t_max / (self.n - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n)

    @staticmethod
    def from_callable(fn, t_max: float, n: int) -> "GridFn":
        t = np.linspace(0.0, t_max, n)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(fn(t), dtype=float)
        return GridFn(vals, t_max)

    def same_grid(self, other: "GridFn") -> bool:
        return self.n == other.n and abs(self.t_max - other.t_max) <= 1e-12 * self.t_max


def _regularized(samples: np.ndarray) -> np.ndarray:
    """Copy with a singular node-0 marker replaced by linear extrapolation."""
    if np.isfinite(samples[0]):
        return samples
    out = samples.copy()
    out[0] = 2.0 * samples[1] - samples[2]
    return out


# ---------------------------------------------------------------------------
# panel moments of the power weight
# ---------------------------------------------------------------------------

def _panel_moments(alpha: float, n: int, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """M_p(j) = int_0^h u**p (t_j + u)**alpha du for p = 0,1,2, j = 0..n-2."""
    m = n - 1
    M0 = np.empty(m)
    M1 = np.empty(m)
    M2 = np.empty(m)
    # j = 0: pure power
    M0[0] = h ** (alpha + 1.0) / (alpha + 1.0)
    M1[0] = h ** (alpha + 2.0) / (alpha + 2.0)
    M2[0] = h ** (alpha + 3.0) / (alpha + 3.0)
    jswitch = min(8, m)
    # small j: difference form, cancellation bounded by (t_j/h)**2 * eps
    for j in range(1, jswitch):
        tj = j * h
        lg = math.log1p(1.0 / j)
        D = [tj ** (alpha + p + 1.0) * math.expm1((alpha + p + 1.0) * lg)
             / (alpha + p + 1.0) for p in (0, 1, 2)]
        M0[j] = D[0]
        M1[j] = D[1] - tj * D[0]
        M2[j] = D[2] - 2.0 * tj * D[1] + tj * tj * D[0]
    # large j: binomial series in x = h/t_j, |x| <= 1/8
    if m > jswitch:
        j = np.arange(jswitch, m, dtype=float)
        x = 1.0 / j
        nu0 = np.zeros_like(x)
        nu1 = np.zeros_like(x)
        nu2 = np.zeros_like(x)
        c = 1.0
        xm = np.ones_like(x)
        for k in range(0, 60):
            nu0 += c * xm / (k + 1.0)
            nu1 += c * xm / (k + 2.0)
            nu2 += c * xm / (k + 3.0)
            c *= (alpha - k) / (k + 1.0)
            xm = xm * x
            if abs(c) * (1.0 / jswitch) ** (k + 1) < 1e-18:
                break
        tja = (j * h) ** alpha
        M0[jswitch:] = tja * h * nu0
        M1[jswitch:] = tja * h * h * nu1
        M2[jswitch:] = tja * h ** 3 * nu2
    return M0, M1, M2


def _panel_weights(alpha: float, G: np.ndarray, n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """P, Q arrays for the shared inner sum; G is the bounded weight factor."""
    M0, M1, M2 = _panel_moments(alpha, n, h)
    N00 = M0 - 2.0 * M1 / h + M2 / (h * h)
    N01 = M1 / h - M2 / (h * h)
    N11 = M2 / (h * h)
    Gl, Gr = G[:-1], G[1:]
    P = Gl * N00 + Gr * N01
    Q = Gl * N01 + Gr * N11
    return P, Q


def _power_origin_fit(f: np.ndarray, h: float) -> tuple[float, float] | None:
    """Fit f ~ a t**g near a singular origin from the first two interior samples."""
    f1, f2 = f[1], f[2]
    if f1 == 0.0 or f2 == 0.0 or (f1 > 0) != (f2 > 0):
        return None
    g = math.log(f1 / f2) / math.log(0.5)
    if not (-0.999 < g < 4.0):
        return None
    return f1 / h ** g, g


def _apply(f: np.ndarray, alpha: float, G: np.ndarray, n: int, h: float) -> np.ndarray:
    P, Q = _panel_weights(alpha, G, n, h)
    freg = _regularized(f)
    out = weighted_conv(freg, P, Q)
    if np.isfinite(f[0]):
        return out
    fit = _power_origin_fit(f, h)
    if fit is None:
        return out
    # replace the bilinear rule on each node's final panel (where the
    # singular factor f(t_i - sigma) dives) by the fitted power a*u**g
    a, g = fit
    t = np.arange(n) * h
    Greg = _regularized(G)
    i = np.arange(2, n)
    w_hi = t[i] ** alpha * Greg[i]              # sigma = t_i endpoint
    w_lo = t[i - 1] ** alpha * Greg[i - 1]      # sigma = t_{i-1} endpoint
    u0 = h ** (g + 1.0) / (g + 1.0)
    u1 = h ** (g + 1.0) / (g + 2.0)             # int u**g * (u/h) du
    repl = a * (w_hi * (u0 - u1) + w_lo * u1)
    old = freg[1] * P[i - 1] + freg[0] * Q[i - 1]
    out[2:] += repl - old
    # node 1: both the weight and f are singular on the same panel
    b00 = gamma(alpha + 1.0) * gamma(g + 1.0) / gamma(alpha + g + 2.0)
    b10 = gamma(alpha + 2.0) * gamma(g + 1.0) / gamma(alpha + g + 3.0)
    repl1 = a * h ** (alpha + g + 1.0) * (
        Greg[0] * (b00 - b10) + Greg[1] * b10)
    out[1] += repl1 - (freg[1] * P[0] + freg[0] * Q[0])
    return out


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def rl_integral_grid(f: GridFn, rho: float) -> GridFn:
    """Fractional integral of order rho > 0 by product integration.

    Exact (to rounding) whenever f is piecewise linear; node 0 is 0 by
    the empty quadrature sum.
    """
    if not rho > 0.0:
        raise DomainError(f"integration order must be positive, got {rho}")
    G = np.full(f.n, 1.0 / gamma(rho))
    out = _apply(f.samples, rho - 1.0, G, f.n, f.h)
    return GridFn(out, f.t_max)


def ddt_grid(f: GridFn) -> GridFn:
    """Central differences, second-order one-sided at both ends."""
    s = _regularized(f.samples)
    h = f.h
    out = np.empty_like(s)
    out[1:-1] = (s[2:] - s[:-2]) / (2.0 * h)
    out[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h)
    out[-1] = (3.0 * s[-1] - 4.0 * s[-2] + s[-3]) / (2.0 * h)
    return GridFn(out, f.t_max)


def rl_derivative_grid(f: GridFn, rho: float) -> GridFn:
    """Fractional derivative of order rho in (0,1): d/dt of the (1-rho)-integral.

    Any f with a nonzero (or singular) value at t=0 has a genuine
    t**(-rho) singularity at the origin; node 0 is then the signed
    infinity marker rather than an extrapolated number.
    """
    if not (0.0 < rho < 1.0):
        raise DomainError(f"derivative order must be in (0, 1), got {rho}")
    g = rl_integral_grid(f, 1.0 - rho)
    out = ddt_grid(g).samples.copy()
    f0 = f.samples[0]
    if not np.isfinite(f0) or f0 != 0.0:
        out[0] = math.copysign(math.inf, f0)
    return GridFn(out, f.t_max)


def convolve(f: GridFn, g: GridFn) -> GridFn:
    """Laplace convolution (f * g)(t) = int_0^t f(t - tau) g(tau) dtau.

    Both factors are reconstructed piecewise linearly and their product
    is integrated exactly per panel (second order; exact for f, g linear).
    For a weakly singular factor use :func:`convolve_power_weighted`.
    """
    if not f.same_grid(g):
        raise UsageError("convolve requires identical grids")
    if not np.isfinite(g.samples[0]):
        raise UsageError(
            "g carries a singular origin marker; pass its bounded part "
            "through convolve_power_weighted instead")
    out = _apply(f.samples, 0.0, g.samples, f.n, f.h)
    return GridFn(out, f.t_max)


def convolve_power_weighted(f: GridFn, G: GridFn, alpha: float) -> GridFn:
    """(f * tau**alpha G)(t) with the power factor handled by exact moments.

    G holds the bounded part of the weakly singular factor
    ``tau**alpha * G(tau)``, alpha > -1.
    """
    if not f.same_grid(G):
        raise UsageError("convolve requires identical grids")
    if alpha <= -1.0:
        raise DomainError(f"weight exponent must be > -1, got {alpha}")
    Gs = _regularized(G.samples)
    out = _apply(f.samples, alpha, Gs, f.n, f.h)
    return GridFn(out, f.t_max)


# ---------------------------------------------------------------------------
# boundary functional
# ---------------------------------------------------------------------------

def _power_model_limit(e0: float, e1: float, e2: float) -> tuple[float, float, bool]:
    """Fit E_j = a + b t_j**s on a geometric (t, 2t, 4t) ladder.

    Returns (a, spread, divergent): ``spread`` compares the limit
    extracted from the lower and upper node pairs; ``divergent`` marks a
    negative fitted exponent whose model term dwarfs the limit, i.e. the
    functional itself blows up as t -> 0.
    """
    d1, d2 = e1 - e0, e2 - e1
    scale = max(abs(e0), abs(e1), abs(e2), 1e-300)
    if abs(d1) <= 1e-13 * scale or abs(d2) <= 1e-13 * scale:
        return e2, abs(d2), False
    q = d2 / d1
    if q <= 0.0 or abs(q - 1.0) < 1e-6:
        # oscillatory differences: noise-dominated, take the top node
        return e2, abs(d2), False
    a = e0 - d1 / (q - 1.0)
    a_hi = e1 - d2 / (q - 1.0)
    divergent = q < 0.999 and abs(e2 - a) > 4.0 * (abs(a) + 1e-12 * scale)
    return a, abs(a_hi - a), divergent


def boundary_functional(f: GridFn, mu: float, sigma: float | None = None) -> float:
    """Estimate lim_{t -> 0+} of the mu-th fractional integral of f.

    Richardson extrapolation under the model ``a + b t**sigma`` over
    geometric node ladders; sigma is fitted from three nodes unless the
    caller supplies the known leading exponent.  mu = 0 is accepted as
    the direct limit of f itself.  A divergent functional or mutually
    inconsistent ladders raise :class:`NumericalFailureError`.
    """
    if not (0.0 <= mu <= 1.0):
        raise DomainError(f"functional order must be in [0, 1], got {mu}")
    if f.n < 17:
        raise UsageError("boundary functional needs at least 17 nodes")
    J = f if mu == 0.0 else rl_integral_grid(f, mu)
    vals = J.samples
    results = []
    base = max(1, f.n // 32)
    for i0 in (base, 2 * base):
        if 4 * i0 >= f.n:
            continue
        e0, e1, e2 = vals[i0], vals[2 * i0], vals[4 * i0]
        if sigma is not None:
            r = 2.0 ** sigma
            if r == 1.0:
                results.append((e1, abs(e2 - e1), False))
            else:
                a = e0 - (e1 - e0) / (r - 1.0)
                a_hi = e1 - (e2 - e1) / (r - 1.0)
                results.append((a, abs(a_hi - a), False))
        else:
            results.append(_power_model_limit(e0, e1, e2))
    if not results:
        raise UsageError("grid too short for the extrapolation ladder")
    a_final, spread, divergent = results[-1]
    if not math.isfinite(a_final) or all(r[2] for r in results):
        raise NumericalFailureError("boundary functional diverges as t -> 0",
                                    achieved=math.inf)
    if len(results) == 2:
        disagree = abs(results[1][0] - results[0][0])
        scale = max(abs(a_final), abs(vals[4 * base] - vals[base]), 1e-30)
        if disagree > 0.75 * scale + 10.0 * spread and disagree > 1e-8:
            raise NumericalFailureError(
                "boundary functional ladders disagree", achieved=disagree)
    return a_final


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

def write_grid_csv(f: GridFn, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,value\n")
        for t, v in zip(f.t, f.samples):
            fh.write(f"{t:.17g},{v:.17g}\n")


def read_grid_csv(path) -> GridFn:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 2:
        raise UsageError(f"{path}: expected two columns t,value")
    t, v = rows[:, 0], rows[:, 1]
    if t[0] != 0.0:
        raise UsageError(f"{path}: grid must start at t = 0")
    h = t[-1] / (len(t) - 1)
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=1e-12 * max(t[-1], 1.0)):
        raise UsageError(f"{path}: grid must be uniform")
    return GridFn(v, float(t[-1]))
