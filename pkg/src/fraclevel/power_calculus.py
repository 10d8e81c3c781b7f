"""Exact fractional calculus on finite sums of power functions.

A :class:`MonomialSum` is a finite combination ``sum_i c_i * t**a_i`` with
every exponent above -1.  The algebra is closed under the fractional
integral, the fractional derivative, the classical derivative and the
composed level-derivative chains built from them, which is what makes it
the ground-truth oracle for the whole package: every grid or series
computation is ultimately checked against these closed forms.

Exponents within ``EXP_TOL`` of each other are treated as the same power;
chain arithmetic reaches the same exponent along different routes and the
float results must collapse to one term.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .gammafn import gamma, rgamma

EXP_TOL = 1e-12


@dataclass(frozen=True)
class Monomial:
    """One term c * t**alpha with alpha > -1."""
    coeff: float
    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise DomainError(f"coefficient must be finite, got {self.coeff}")
        if not math.isfinite(self.alpha) or self.alpha <= -1.0:
            raise DomainError(f"exponent must be finite and > -1, got {self.alpha}")


@dataclass(frozen=True)
class MonomialSum:
    """Normalized sum of monomials: sorted by exponent, merged, no zeros."""
    terms: tuple[Monomial, ...]

    @staticmethod
    def from_terms(pairs) -> "MonomialSum":
        """Build from an iterable of (coeff, alpha) pairs, normalizing."""
        items = sorted((float(a), float(c)) for c, a in pairs)
        merged: list[list[float]] = []
        for a, c in items:
            if merged and a - merged[-1][0] <= EXP_TOL:
                merged[-1][1] += c
            else:
                merged.append([a, c])
        return MonomialSum(tuple(Monomial(c, a) for a, c in merged if c != 0.0))

    @staticmethod
    def zero() -> "MonomialSum":
        return MonomialSum(())

    def is_zero(self) -> bool:
        return not self.terms

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "MonomialSum") -> "MonomialSum":
        return MonomialSum.from_terms(
            [(m.coeff, m.alpha) for m in self.terms]
            + [(m.coeff, m.alpha) for m in other.terms])

    def __sub__(self, other: "MonomialSum") -> "MonomialSum":
        return self + (-1.0) * other

    def __rmul__(self, s: float) -> "MonomialSum":
        return MonomialSum.from_terms([(s * m.coeff, m.alpha) for m in self.terms])

    def __neg__(self) -> "MonomialSum":
        return (-1.0) * self

    def __call__(self, t):
        return evaluate(self, t)


def monomial(coeff: float, alpha: float) -> MonomialSum:
    return MonomialSum.from_terms([(coeff, alpha)])


def constant(c: float) -> MonomialSum:
    return MonomialSum.from_terms([(c, 0.0)])


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def rl_integral(f: MonomialSum, rho: float) -> MonomialSum:
    """Fractional integral of order rho > 0: c t^a -> c G(a+1)/G(a+rho+1) t^(a+rho)."""
    if not (rho > 0.0):
        raise DomainError(f"integration order must be positive, got {rho}")
    out = []
    for m in f.terms:
        out.append((m.coeff * gamma(m.alpha + 1.0) * rgamma(m.alpha + rho + 1.0),
                    m.alpha + rho))
    return MonomialSum.from_terms(out)


def rl_derivative(f: MonomialSum, rho: float) -> MonomialSum:
    """Fractional derivative of order rho in (0, 1].

    Each term maps to c G(a+1)/G(a-rho+1) t^(a-rho); terms with
    a = rho - 1 are annihilated exactly through the 1/Gamma(0) = 0
    convention.  A term whose image would leave the algebra (exponent
    at or below -1 with a nonzero coefficient) raises.
    """
    if not (0.0 < rho <= 1.0):
        raise DomainError(f"derivative order must be in (0, 1], got {rho}")
    out = []
    for m in f.terms:
        g = m.alpha - rho + 1.0
        gr = round(g)
        if abs(g - gr) <= EXP_TOL and gr <= 0:
            continue  # annihilated: 1/Gamma at a nonpositive integer
        new_alpha = m.alpha - rho
        if new_alpha <= -1.0 + EXP_TOL:
            raise DomainError(
                f"derivative of t^{m.alpha} of order {rho} leaves the algebra "
                f"(exponent {new_alpha} <= -1)")
        out.append((m.coeff * gamma(m.alpha + 1.0) * rgamma(g), new_alpha))
    return MonomialSum.from_terms(out)


def ddt(f: MonomialSum) -> MonomialSum:
    """Classical derivative; constants vanish, exponents below 0 must stay > -1."""
    out = []
    for m in f.terms:
        if abs(m.alpha) <= EXP_TOL:
            continue
        if m.alpha - 1.0 <= -1.0 + EXP_TOL:
            raise DomainError(
                f"d/dt of t^{m.alpha} leaves the algebra (exponent {m.alpha - 1.0})")
        out.append((m.coeff * m.alpha, m.alpha - 1.0))
    return MonomialSum.from_terms(out)


def caputo_derivative(f: MonomialSum, rho: float) -> MonomialSum:
    """Caputo derivative: the fractional derivative of f - f(0)."""
    if not (0.0 < rho <= 1.0):
        raise DomainError(f"derivative order must be in (0, 1], got {rho}")
    kept = []
    for m in f.terms:
        if m.alpha < -EXP_TOL:
            raise DomainError(
                f"Caputo derivative needs f(0) finite; t^{m.alpha} is singular at 0")
        if abs(m.alpha) > EXP_TOL:
            kept.append((m.coeff, m.alpha))
    return rl_derivative(MonomialSum.from_terms(kept), rho)


def hilfer_derivative(f: MonomialSum, rho: float, nu: float) -> MonomialSum:
    """Type-nu interpolation between the fractional (nu=0) and Caputo (nu=1)
    derivatives, evaluated by composing the defining operator chain."""
    if not (0.0 < rho < 1.0):
        raise DomainError(f"order must be in (0, 1), got {rho}")
    if not (0.0 <= nu <= 1.0):
        raise DomainError(f"type must be in [0, 1], got {nu}")
    g = rl_integral(f, (1.0 - rho) * (1.0 - nu)) if (1.0 - rho) * (1.0 - nu) > 0 else f
    g = ddt(g)
    a = nu * (1.0 - rho)
    return rl_integral(g, a) if a > 0 else g


def evaluate(f: MonomialSum, t):
    """Pointwise value; t may be a scalar or an array, all entries >= 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("evaluation points must be >= 0")
    has_neg = any(m.alpha < -EXP_TOL for m in f.terms)
    if has_neg and np.any(arr == 0.0):
        raise DomainError("t = 0 with a negative exponent present is singular")
    out = np.zeros_like(arr)
    for m in f.terms:
        if abs(m.alpha) <= EXP_TOL:
            out = out + m.coeff
        else:
            with np.errstate(divide="ignore"):
                out = out + m.coeff * np.power(arr, m.alpha)
    return float(out) if np.isscalar(t) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# comparison and serialization
# ---------------------------------------------------------------------------

def max_coeff_discrepancy(f: MonomialSum, g: MonomialSum, relative: bool = True) -> float:
    """Largest coefficient difference after aligning exponents within EXP_TOL.

    With ``relative=True`` the difference is scaled by the largest
    coefficient magnitude present in either operand (0 scale gives 0).
    """
    diff = f - g
    if not diff.terms:
        return 0.0
    worst = max(abs(m.coeff) for m in diff.terms)
    if not relative:
        return worst
    scale = max((abs(m.coeff) for m in list(f.terms) + list(g.terms)), default=0.0)
    return worst / scale if scale > 0.0 else worst


def format_monomial_sum(f: MonomialSum) -> str:
    """Serialize as ``c1*t^a1 + c2*t^a2`` with 17 significant digits."""
    if not f.terms:
        return "0"
    parts = []
    for i, m in enumerate(f.terms):
        c = f"{abs(m.coeff):.17g}*t^{m.alpha:.17g}"
        if i == 0:
            parts.append(("-" if m.coeff < 0 else "") + c)
        else:
            parts.append(("- " if m.coeff < 0 else "+ ") + c)
    return " ".join(parts)


_TERM_RE = re.compile(
    r"^\s*(?P<coeff>[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)?"
    r"\s*(?P<tpart>\*?\s*t(\^(?P<alpha>[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?))?)?\s*$")


def parse_monomial_sum(text: str) -> MonomialSum:
    """Parse the textual form; accepts bare constants, ``t``, ``t^a``, ``c*t^a``."""
    s = text.strip()
    if s in ("", "0"):
        return MonomialSum.zero()
    # split on +/- that separate terms (not exponent signs)
    chunks = re.split(r"(?<![eE^])\s*([+-])\s*", "+" + s if s[0] not in "+-" else s)
    terms = []
    sign = 1.0
    for piece in chunks:
        if piece == "+":
            sign = 1.0
            continue
        if piece == "-":
            sign = -1.0
            continue
        if not piece.strip():
            continue
        m = _TERM_RE.match(piece)
        if not m or (m.group("coeff") is None and m.group("tpart") is None):
            raise UsageError(f"cannot parse monomial term {piece!r} in {text!r}")
        coeff = float(m.group("coeff")) if m.group("coeff") else 1.0
        if m.group("tpart"):
            alpha = float(m.group("alpha")) if m.group("alpha") else 1.0
        else:
            alpha = 0.0
        terms.append((sign * coeff, alpha))
    return MonomialSum.from_terms(terms)
