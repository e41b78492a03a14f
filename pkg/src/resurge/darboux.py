"""Singularity-exponent estimates from ratios of consecutive coefficients.

Near the nearest singularity the Borel function is modelled as

    B(z) = (1 - z)^(-b) H(z) + K(z),   H(z) = c0 + c1 (z - 1) + ...,

which gives, for the coefficient of z^n,

    B_n / B_{n-1} = 1 + (b-1)/n + (b-1) s / (n (n+b-2)) + O(n^-3),   s = c1/c0.

Writing the relation at n and n-1 and eliminating s leaves one scalar
equation in b.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .pade import DEFAULT_DPS, to_mpf
from .series import BorelSeries


class DarbouxError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DarbouxEstimate:
    b: mpmath.mpf
    s: mpmath.mpf
    n: int

    def __iter__(self):
        return iter((self.b, self.s))


def _coeffs(B) -> list:
    if isinstance(B, BorelSeries):
        return list(B.coeffs)
    return list(B)


def _ratio(num, den):
    if isinstance(num, (int, Fraction)) and isinstance(den, (int, Fraction)):
        return to_mpf(Fraction(num) / Fraction(den))
    return to_mpf(num) / to_mpf(den)


def _g(ratio, k, b):
    """(b-1)*s implied by the ratio equation at index k."""
    return k * (k + b - 2) * (ratio - 1) - (b - 1) * (k + b - 2)


def darboux_fit(B: BorelSeries | Sequence, n: int, bracket: tuple[float, float] = (0.0, 2.0),
                dps: int = DEFAULT_DPS, tol: float = 1e-12, scan: int = 64) -> DarbouxEstimate:
    """Solve the ratio relations at ``n`` and ``n - 1`` for ``(b, s)``.

    ``B`` is indexed by power of z (a :class:`BorelSeries` stores B_1 at z^0).
    The root in ``bracket`` is located by a sign-change scan, bisected and
    finished with Newton steps.
    """
    c = _coeffs(B)
    if n < 2 or len(c) < n + 1:
        raise ValueError(f"need coefficients up to z^{n} (have {len(c)})")
    if c[n] == 0 or c[n - 1] == 0 or c[n - 2] == 0:
        raise DarbouxError(f"zero coefficient among z^{n - 2}..z^{n}; choose a different n")
    with mpmath.workdps(dps):
        r_n = _ratio(c[n], c[n - 1])
        r_m = _ratio(c[n - 1], c[n - 2])

        def F(b):
            return _g(r_n, n, b) - _g(r_m, n - 1, b)

        lo, hi = (mpmath.mpf(v) for v in bracket)
        grid = [lo + (hi - lo) * i / scan for i in range(scan + 1)]
        vals = [F(b) for b in grid]
        cell = None
        for i in range(scan):
            if vals[i] == 0:
                cell = (grid[i], grid[i])
                break
            if vals[i] * vals[i + 1] < 0:
                cell = (grid[i], grid[i + 1])
                break
        if cell is None:
            if vals[-1] == 0:
                cell = (grid[-1], grid[-1])
            else:
                raise DarbouxError(
                    f"no root for b in {bracket} at n={n}; try a different n or a wider bracket")
        a, z = cell
        fa = F(a)
        for _ in range(60):
            if a == z:
                break
            mid = (a + z) / 2
            fm = F(mid)
            if fm == 0 or (z - a) < mpmath.mpf(tol) / 1000:
                a = z = mid
                break
            if fa * fm < 0:
                z = mid
            else:
                a, fa = mid, fm
        b = (a + z) / 2
        for _ in range(20):
            h = mpmath.mpf(10) ** (-(dps // 3))
            d = (F(b + h) - F(b - h)) / (2 * h)
            if d == 0:
                break
            step = F(b) / d
            b -= step
            if abs(step) < mpmath.mpf(10) ** (-(dps - 10)):
                break
        if abs(F(b)) > tol * max(1, abs(r_n) * n * n):
            raise DarbouxError(f"Darboux solve did not reach tolerance at n={n}")
        if b == 1:
            s = mpmath.mpf(0)
        else:
            s = _g(r_n, n, b) / (b - 1)
        return DarbouxEstimate(+b, +s, n)


SUPPORTED_KINDS = ("simple-pole", "branch-1/2")


def classify_exponent(b, tol: float = 0.1) -> tuple[str, Fraction]:
    """Map an estimated exponent to an approximant lattice.

    Integer b >= 1 (within ``tol``) means a pole at each lattice point and
    is served by the simple-pole lattice; half-integer b >= 1/2 means a
    square-root branch point.  Anything else is reported as unsupported
    with the nearest simple fraction.
    """
    b = float(b)
    k = round(b)
    if k >= 1 and abs(b - k) < tol:
        return "simple-pole", Fraction(k)
    h = round(b - 0.5) + Fraction(1, 2)
    if h >= Fraction(1, 2) and abs(b - float(h)) < tol:
        return "branch-1/2", h
    return "unsupported", Fraction(b).limit_denominator(12)
