"""Principal-value Laplace transform, discontinuities and the median sum.

The resummed function is

    y(x) = PV int_0^inf exp(-x z) P(z) dz + sum_{n,k} t_{n,k} C^n d'^k y_0(x),

where P is the (realified) approximant, ``t_{n,k}`` is the real median
coefficient table and ``d'^k y_0`` are the discontinuities across the
positive real axis with the factor i divided out.  The Stokes constant is
absorbed into C.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
import mpmath
import numpy as np
from scipy.special import shichi

from .alien import MedianCoefficientTable, leading_sector_weight, solve_bridge_system
from .approximant import ResurgentApproximant
from .pade import to_mpf

DEFAULT_TOL = 1e-10


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (error estimate {estimate:.3g})")
        self.estimate = estimate


class FitError(ArithmeticError):
    pass


def _realify(v) -> float:
    if isinstance(v, mpmath.mpc):
        return float(v.real + v.imag)
    return float(v)


class PVIntegrator:
    """Principal-value Laplace integral of one approximant, vectorised over x.

    The z axis is cut into [0, lam/2], windows of half-width lam/2 around
    each lattice point and tail pieces of width lam/2.  In each window the
    two sides are paired, z = m lam +/- u with u = t^2.  For poles the term
    c_m/(m lam - z) is removed and its principal value added in closed form,
    2 c_m exp(-m lam x) Shi(x lam/2); square-root endpoints are integrable
    after the t^2 substitution.  Each piece is integrated with Gauss-Legendre
    rules of n and 2n nodes and split until they agree.
    """

    def __init__(self, ra: ResurgentApproximant, tol: float = DEFAULT_TOL, nodes: int = 16,
                 bits: int = 160, max_depth: int = 14):
        self.ra = ra
        self.tol = tol
        self.nodes = nodes
        self.max_depth = max_depth
        self.lam = float(ra.lam)
        self._cache: dict[float, float] = {}
        if ra.kind == "pole":
            self.local_exact = [ra.local_coefficient(m) for m in range(1, ra.N_prime + 1)]
            self.local = [float(v) for v in self.local_exact]
        else:
            self.local = None
        self._setup_fast(bits)
        self._rules = {n: np.polynomial.legendre.leggauss(n) for n in (nodes, 2 * nodes)}

    # integrand values -------------------------------------------------
    def _setup_fast(self, bits: int = 160):
        ctx = gmpy2.get_context().copy()
        ctx.precision = bits
        self._ctx = ctx
        with gmpy2.context(ctx):
            q = lambda f: gmpy2.mpfr(gmpy2.mpq(f.numerator, f.denominator))
            self._cnum = [q(v) for v in reversed(self.ra.c)]
            self._lat = [q(n * self.ra.lam) for n in range(1, self.ra.N_prime + 1)]
            self._loc = None if self.local is None else [q(v) for v in self.local_exact]

    def _R(self, z: float, m: int | None = None) -> float:
        """Realified approximant at z, or at m lam + z when m is given.

        With m given the offset is added at full precision (nodes sit very
        close to the lattice point) and, for poles, the pole term at m lam
        is subtracted.
        """
        key = (z, m)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        with gmpy2.context(self._ctx):
            zz = gmpy2.mpfr(z) if m is None else self._lat[m - 1] + gmpy2.mpfr(z)
            num = gmpy2.mpfr(0)
            for cv in self._cnum:
                num = num * zz + cv
            if self.ra.kind == "pole":
                den = gmpy2.mpfr(1)
                for p in self._lat:
                    den *= 1 - zz / p
                if den == 0:
                    raise ZeroDivisionError(f"z = {z} is a lattice singularity")
                v = num / den
                if m is not None:
                    v += self._loc[m - 1] / gmpy2.mpfr(z)
                out = float(v)
            else:
                # sqrt(1 - (z + i0)/p): real above, -i sqrt(|w|) past the point
                mod = gmpy2.mpfr(1)
                nneg = 0
                for p in self._lat:
                    w = 1 - zz / p
                    if w < 0:
                        nneg += 1
                    elif w == 0:
                        raise ZeroDivisionError(f"z = {z} is a lattice singularity")
                    mod *= abs(w)
                v = num / gmpy2.sqrt(mod)
                # 1/(-i)^k = i^k
                ph = ((1, 0), (0, 1), (-1, 0), (0, -1))[nneg % 4]
                out = float(v * ph[0] + v * ph[1])
        self._cache[key] = out
        return out

    def _plain(self, a: float, b: float, n: int, xs: np.ndarray):
        s, w = self._rules[n]
        z = a + (b - a) * (s + 1) / 2
        R = np.array([self._R(float(v)) for v in z])
        terms = (b - a) / 2 * np.exp(-np.outer(xs, z)) * (w * R)
        return terms.sum(axis=1), np.abs(terms).sum(axis=1)

    def _pair(self, m: int, t0: float, t1: float, n: int, xs: np.ndarray) -> np.ndarray:
        s, w = self._rules[n]
        t = t0 + (t1 - t0) * (s + 1) / 2
        u = t * t
        c = m * self.lam
        Rp = np.array([self._R(float(v), m) for v in u])
        Rm = np.array([self._R(float(-v), m) for v in u])
        ep = np.exp(-np.outer(xs, c + u)) * Rp
        em = np.exp(-np.outer(xs, c - u)) * Rm
        scale = (t1 - t0) / 2 * (w * 2 * t)
        return ((ep + em) * scale).sum(axis=1), ((np.abs(ep) + np.abs(em)) * scale).sum(axis=1)

    def _adaptive(self, piece, lo, hi, xs, tol, depth=0):
        n = self.nodes
        coarse, _ = piece(lo, hi, n, xs)
        fine, mag = piece(lo, hi, 2 * n, xs)
        diff = np.abs(fine - coarse)
        # below this the rules cannot be told apart in double precision
        floor = 256 * np.finfo(float).eps * mag
        err = float(np.max(diff)) if len(xs) else 0.0
        if err <= tol or np.all(diff <= floor):
            return fine, err
        if depth >= self.max_depth:
            raise QuadratureError(f"PV quadrature did not converge on [{lo}, {hi}]", err)
        mid = (lo + hi) / 2
        a, ea = self._adaptive(piece, lo, mid, xs, tol / 2, depth + 1)
        b, eb = self._adaptive(piece, mid, hi, xs, tol / 2, depth + 1)
        return a + b, ea + eb

    def integrate(self, xs) -> tuple[np.ndarray, float]:
        """PV integral at every x in ``xs``; returns (values, error estimate)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if np.any(xs <= 0):
            raise ValueError("x must be positive")
        lam, h = self.lam, self.lam / 2
        Np = self.ra.N_prime
        npieces = Np + 1
        piece_tol = self.tol / (4 * npieces)
        total = np.zeros_like(xs)
        err = 0.0

        v, e = self._adaptive(self._plain, 0.0, h, xs, piece_tol)
        total += v
        err += e
        for m in range(1, Np + 1):
            v, e = self._adaptive(lambda a, b, n, X, m=m: self._pair(m, a, b, n, X),
                                  0.0, math.sqrt(h), xs, piece_tol)
            total += v
            err += e
            if self.local is not None:
                total += 2 * float(self.local[m - 1]) * np.exp(-m * lam * xs) * shichi(xs * h)[0]

        # tail beyond the last lattice window, until exp(-x z) kills it
        z0 = Np * lam + h
        xmin = float(xs.min())
        while True:
            v, e = self._adaptive(self._plain, z0, z0 + h, xs, piece_tol)
            total += v
            err += e
            z0 += h
            bound = abs(self._R(z0)) * math.exp(-xmin * z0) / xmin
            if bound < self.tol / 10 and np.max(np.abs(v)) < self.tol / 10:
                break
            if z0 > Np * lam + 2000 * lam:
                raise QuadratureError("tail of the Laplace integral does not decay", bound)
        if err > self.tol:
            raise QuadratureError("PV quadrature tolerance not met", err)
        return total, err


def pv_laplace(ra: ResurgentApproximant, x, tol: float = DEFAULT_TOL):
    """Principal value of int_0^inf exp(-x z) P(z) dz at scalar or array ``x``."""
    vals, _ = PVIntegrator(ra, tol).integrate(x)
    return float(vals[0]) if np.ndim(x) == 0 else vals


@dataclass(frozen=True)
class LadderTerm:
    kappa: float
    m: int          # exp(-m lam x)
    power: Fraction  # x^(-power)


@dataclass(frozen=True)
class DiscontinuityLadder:
    """``d'^k y_0(x) = sum kappa exp(-m lam x) x^-p`` for k = 1..k_max."""

    kind: str
    lam: Fraction
    orders: tuple[tuple[LadderTerm, ...], ...]  # orders[k-1]
    all_higher_vanish: bool

    @property
    def k_max(self) -> int:
        return len(self.orders)

    def __call__(self, k: int, x):
        x = np.asarray(x, dtype=float)
        if k < 1 or k > self.k_max:
            return np.zeros_like(x)
        out = np.zeros_like(x)
        lam = float(self.lam)
        for t in self.orders[k - 1]:
            out = out + t.kappa * np.exp(-t.m * lam * x) * x ** (-float(t.power))
        return out


def discontinuity_ladder(ra: ResurgentApproximant, k_max: int = 3) -> DiscontinuityLadder:
    """Discontinuities of the lateral sums across the positive axis.

    Pole kind: d'y_0 = 2 pi sum_m c_m exp(-m lam x) with c_m = -Res P, and
    every higher order vanishes.

    Branch kind: a term c/sqrt(m lam - z) jumps by 2 i c / sqrt(z - m lam),
    whose Laplace transform is 2 sqrt(pi) c exp(-m lam x)/sqrt(x).  Order k
    keeps the leading sector m = k only, weighted by the ratio of the
    sector-k coefficient in delta^k to that in delta, with c realified as
    Re + Im.
    """
    if not 1 <= k_max <= 3:
        raise ValueError("k_max must be between 1 and 3")
    orders = []
    if ra.kind == "pole":
        first = []
        for m in range(1, ra.N_prime + 1):
            try:
                c = ra.local_coefficient(m)
            except (ZeroDivisionError, ArithmeticError) as exc:
                raise ArithmeticError(f"residue extraction failed at z = {m}*lambda") from exc
            if c:
                first.append(LadderTerm(float(2 * mpmath.pi * to_mpf(c)), m, Fraction(0)))
        orders.append(tuple(first))
        orders.extend(() for _ in range(k_max - 1))
        return DiscontinuityLadder(ra.kind, ra.lam, tuple(orders), True)

    norm = 2 * mpmath.sqrt(mpmath.pi)
    cs = {}
    for m in range(1, ra.N_prime + 1):
        try:
            cs[m] = _realify(ra.local_coefficient(m))
        except (ZeroDivisionError, ArithmeticError) as exc:
            raise ArithmeticError(f"local coefficient extraction failed at z = {m}*lambda") from exc
    orders.append(tuple(LadderTerm(float(norm * c), m, Fraction(1, 2)) for m, c in cs.items() if c))
    for k in range(2, k_max + 1):
        if k in cs and cs[k]:
            w = float(leading_sector_weight(k))
            orders.append((LadderTerm(float(norm * cs[k]) * w, k, Fraction(1, 2)),))
        else:
            orders.append(())
    return DiscontinuityLadder(ra.kind, ra.lam, tuple(orders), False)


_TABLE_CACHE: dict[int, MedianCoefficientTable] = {}


def median_table(K: int = 4) -> MedianCoefficientTable:
    if K not in _TABLE_CACHE:
        _TABLE_CACHE[K] = solve_bridge_system(K)
    return _TABLE_CACHE[K]


def _sector_polynomial(ladder: DiscontinuityLadder, table: MedianCoefficientTable, x) -> np.ndarray:
    """Coefficients T[n](x) of C^n in the non-PV part, shape (rows, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    deltas = {k: ladder(k, x) for k in range(1, table.K)}
    T = np.zeros((len(table.primed), len(x)))
    for n, row in enumerate(table.primed):
        for k, coeff in enumerate(row):
            if coeff and k >= 1:
                T[n] += float(coeff) * deltas.get(k, 0.0)
    return T


def _exp_sectors(ladder, table, C, x) -> np.ndarray:
    """Contributions grouped by power of the discontinuity (k = 1..K-1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((table.K - 1, len(x)))
    for k in range(1, table.K):
        d = ladder(k, x)
        w = sum(float(row[k]) * C**n for n, row in enumerate(table.primed))
        out[k - 1] = w * d
    return out


def assemble_median(ra: ResurgentApproximant, ladder: DiscontinuityLadder, table: MedianCoefficientTable,
                    C: float, x, pv=None):
    """Real value of the truncated median sum at ``x``.

    ``pv`` may pass precomputed principal values at ``x``.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    pv = PVIntegrator(ra).integrate(xa)[0] if pv is None else np.atleast_1d(pv)
    val = pv + _exp_sectors(ladder, table, C, xa).sum(axis=0)
    return float(val[0]) if np.ndim(x) == 0 else val


def fit_transseries_constant(ra: ResurgentApproximant, ladder: DiscontinuityLadder,
                             table: MedianCoefficientTable, x0: float, y_target: float,
                             pv0: float | None = None, threshold: float = 1e-300) -> float:
    """C with assemble_median(C, x0) = y_target.

    Linear in C for poles; for branch points a polynomial of degree up to
    K - 1, whose real root of smallest magnitude is returned.
    """
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    if pv0 is None:
        pv0 = float(PVIntegrator(ra).integrate([x0])[0][0])
    T = _sector_polynomial(ladder, table, [x0])[:, 0]
    poly = [float(t) for t in T]
    poly[0] += pv0 - y_target
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    if len(poly) == 1:
        if poly[0] == 0:
            return 0.0
        raise FitError("the discontinuity vanishes at x0; C is undetermined")
    if len(poly) == 2:
        if abs(poly[1]) < threshold:
            raise FitError("linear coefficient of C is degenerate at x0")
        return -poly[0] / poly[1]
    roots = np.roots(poly[::-1])
    real = [r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
    if not real:
        raise FitError("no real root for the transseries constant")
    C = min(real, key=abs)
    f = lambda c: sum(p * c**i for i, p in enumerate(poly))
    df = lambda c: sum(i * p * c ** (i - 1) for i, p in enumerate(poly) if i)
    with mpmath.workdps(30):
        C = float(mpmath.findroot(lambda c: f(c), mpmath.mpf(C), tol=1e-28)) if df(C) else C
    return C


@dataclass
class ResummedSolution:
    ra: ResurgentApproximant
    ladder: DiscontinuityLadder
    table: MedianCoefficientTable
    C: float
    integrator: PVIntegrator = field(repr=False)

    def pv(self, x) -> np.ndarray:
        return self.integrator.integrate(x)[0]

    def components(self, x) -> dict[str, np.ndarray]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pv = self.pv(x)
        sectors = _exp_sectors(self.ladder, self.table, self.C, x)
        out = {"x": x, "y_med": pv + sectors.sum(axis=0), "pv_part": pv}
        for k in range(3):
            out[f"exp_sector_{k + 1}"] = sectors[k] if k < len(sectors) else np.zeros_like(x)
        return out

    def __call__(self, x):
        y = self.components(x)["y_med"]
        return float(y[0]) if np.ndim(x) == 0 else y

    def write_csv(self, path, x) -> None:
        comp = self.components(x)
        cols = ["x", "y_med", "pv_part", "exp_sector_1", "exp_sector_2", "exp_sector_3"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for i in range(len(comp["x"])):
                w.writerow([repr(float(comp[c][i])) for c in cols])


def resum(ra: ResurgentApproximant, x0: float, y_target: float, K: int = 4,
          tol: float = DEFAULT_TOL, fit: bool = True) -> ResummedSolution:
    """Build the ladder, fit C to y(x0) = y_target and return the solution."""
    integ = PVIntegrator(ra, tol)
    ladder = discontinuity_ladder(ra, min(3, K - 1))
    table = median_table(K)
    C = 0.0
    if fit:
        pv0 = float(integ.integrate([x0])[0][0])
        C = fit_transseries_constant(ra, ladder, table, x0, y_target, pv0=pv0)
    return ResummedSolution(ra, ladder, table, C, integ)


def sample_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.linspace(lo, hi, count)


__all__ = [
    "QuadratureError", "FitError", "PVIntegrator", "pv_laplace", "LadderTerm", "DiscontinuityLadder",
    "discontinuity_ladder", "median_table", "assemble_median",
    "fit_transseries_constant", "ResummedSolution", "resum", "sample_grid",
]
