"""Pade approximants, pole/residue extraction and pole-accumulation histograms.

Coefficient sequences are indexed by power of z.  When every input is an
``int`` or ``Fraction`` the Pade system is solved exactly; otherwise it is
solved at the requested mpmath working precision.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .series import BorelSeries, NormalFormODE, borel_transform, derive_coefficients

log = logging.getLogger(__name__)

DEFAULT_DPS = 64


class PadeError(ArithmeticError):
    """Singular Pade system that could not be rescued by lowering M."""


class RootFindingError(ArithmeticError):
    def __init__(self, message: str, cluster=None):
        super().__init__(message)
        self.cluster = cluster


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def to_mpf(value):
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpmathify(value)


@dataclass(frozen=True)
class PadeApproximant:
    """p(z)/q(z) with q_0 = 1.  ``dps`` is None on the exact path."""

    p: tuple
    q: tuple
    L: int
    M: int
    dps: int | None
    requested: tuple[int, int] = (0, 0)

    @property
    def exact(self) -> bool:
        return self.dps is None

    def taylor(self, n: int) -> list:
        """First ``n`` Taylor coefficients of p/q (by series division)."""
        zero = Fraction(0) if self.exact else mpmath.mpf(0)
        out = []
        for k in range(n):
            s = self.p[k] if k < len(self.p) else zero
            for j in range(1, min(k, len(self.q) - 1) + 1):
                s -= self.q[j] * out[k - j]
            out.append(s)
        return out

    def __call__(self, z):
        with mpmath.workdps(self.dps or DEFAULT_DPS):
            z = mpmath.mpmathify(z)
            num = mpmath.polyval([to_mpf(c) for c in reversed(self.p)], z)
            den = mpmath.polyval([to_mpf(c) for c in reversed(self.q)], z)
            return num / den


@dataclass(frozen=True)
class PoleData:
    location: mpmath.mpc
    residue: mpmath.mpc

    @property
    def b_estimate(self) -> float:
        """|residue|, the exponent estimate when the input was a log-derivative."""
        return float(abs(self.residue))


def _solve_exact(A: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    n = len(rhs)
    M = [row[:] + [r] for row, r in zip(A, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        prow = M[col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            if f:
                row = M[r]
                for c in range(col, n + 1):
                    row[c] -= f * prow[c]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        s = M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / M[r][r]
    return x


def _solve_mp(A, rhs, dps: int):
    """QR solve; returns None when R has a relatively negligible pivot."""
    n = len(rhs)
    Am = mpmath.matrix(A)
    bm = mpmath.matrix(rhs)
    Q, R = mpmath.qr(Am)
    diag = [abs(R[i, i]) for i in range(n)]
    scale = max(diag) if diag else mpmath.mpf(1)
    if scale == 0 or min(diag) < scale * mpmath.mpf(10) ** (-(dps * 3) // 4):
        return None
    y = Q.T * bm
    x = [mpmath.mpf(0)] * n
    for i in range(n - 1, -1, -1):
        s = y[i] - sum(R[i, j] * x[j] for j in range(i + 1, n))
        x[i] = s / R[i, i]
    return x


def _strip(coeffs: list, exact: bool, keep: int = 1) -> list:
    if exact:
        while len(coeffs) > keep and coeffs[-1] == 0:
            coeffs.pop()
    else:
        ref = max((abs(c) for c in coeffs), default=0)
        tiny = ref * mpmath.mpf(10) ** (-(mpmath.mp.dps * 3) // 4)
        while len(coeffs) > keep and abs(coeffs[-1]) <= tiny:
            coeffs.pop()
    return coeffs


def pade(coeffs: Sequence, L: int, M: int, dps: int | None = None, exact: bool | None = None) -> PadeApproximant:
    """[L/M] Pade approximant of a truncated power series.

    A singular linear system is retried as [L+1/M-1], which keeps the number
    of matched coefficients; trailing zero coefficients are then dropped.
    """
    if L < 0 or M < 0:
        raise ValueError("degrees must be nonnegative")
    if len(coeffs) < L + M + 1:
        raise ValueError(f"need {L + M + 1} coefficients for [{L}/{M}], got {len(coeffs)}")
    if exact is None:
        exact = _is_exact(coeffs[: L + M + 1])
    dps = None if exact else (dps or DEFAULT_DPS)
    requested = (L, M)
    with mpmath.workdps(dps or DEFAULT_DPS):
        c = [Fraction(v) for v in coeffs[: L + M + 1]] if exact else [to_mpf(v) for v in coeffs[: L + M + 1]]
        zero = Fraction(0) if exact else mpmath.mpf(0)
        while True:
            if M == 0:
                q = [Fraction(1) if exact else mpmath.mpf(1)]
                break
            get = lambda i: c[i] if i >= 0 else zero
            A = [[get(L + k - j) for j in range(1, M + 1)] for k in range(1, M + 1)]
            rhs = [-get(L + k) for k in range(1, M + 1)]
            sol = _solve_exact(A, rhs) if exact else _solve_mp(A, rhs, dps)
            if sol is not None:
                q = [Fraction(1) if exact else mpmath.mpf(1)] + list(sol)
                break
            log.debug("singular Pade system [%d/%d], retrying [%d/%d]", L, M, L + 1, M - 1)
            L, M = L + 1, M - 1
        p = []
        for k in range(L + 1):
            s = zero
            for j in range(min(k, M) + 1):
                s += q[j] * c[k - j]
            p.append(s)
        p = _strip(p, exact)
        q = _strip(q, exact)
    return PadeApproximant(tuple(p), tuple(q), len(p) - 1, len(q) - 1, dps, requested)


def log_derivative_coeffs(coeffs, count: int | None = None) -> list:
    """Taylor coefficients of h'/h where B(z) = z^k h(z), h(0) != 0.

    ``coeffs`` is a :class:`BorelSeries` or any sequence indexed by power of z.
    The leading monomial only contributes k/z, which is dropped.
    """
    if isinstance(coeffs, BorelSeries):
        coeffs = list(coeffs.coeffs)
    coeffs = list(coeffs)
    k = next((i for i, v in enumerate(coeffs) if v != 0), None)
    if k is None:
        raise ValueError("log-derivative of an identically zero series")
    h = coeffs[k:]
    avail = len(h) - 1
    count = avail if count is None else count
    if count > avail:
        raise ValueError(f"only {avail} log-derivative coefficients are determined")
    out = []
    for n in range(count):
        s = (n + 1) * h[n + 1]
        for j in range(1, n + 1):
            s -= h[j] * out[n - j]
        out.append(s / h[0])
    return out


def _aberth(coeffs_desc, seeds, dps: int, maxiter: int = 500):
    """Simultaneous Aberth-Ehrlich refinement of all roots."""
    n = len(seeds)
    poly = coeffs_desc
    dpoly = [c * (n - i) for i, c in enumerate(poly[:-1])]
    abspoly = [abs(c) for c in poly]
    z = [mpmath.mpc(s) for s in seeds]
    tol = mpmath.mpf(10) ** (-(dps - 5))
    # ill-conditioned roots jitter at noise level, so also accept a small backward error
    berr_tol = mpmath.mpf(10) ** (-(dps - 8))
    for _ in range(maxiter):
        moved = mpmath.mpf(0)
        berr = mpmath.mpf(0)
        for i in range(n):
            pz = mpmath.polyval(poly, z[i])
            scale = mpmath.polyval(abspoly, abs(z[i]))
            if scale:
                berr = max(berr, abs(pz) / scale)
            dz = mpmath.polyval(dpoly, z[i])
            if pz == 0:
                continue
            ratio = pz / dz if dz != 0 else mpmath.mpf(1)
            s = mpmath.fsum(1 / (z[i] - z[j]) for j in range(n) if j != i and z[i] != z[j])
            w = ratio / (1 - ratio * s)
            z[i] -= w
            moved = max(moved, abs(w) / max(abs(z[i]), 1))
        if moved < tol or berr < berr_tol:
            return z, True
    return z, False


def polynomial_roots(coeffs_asc: Sequence, dps: int = DEFAULT_DPS) -> list:
    """All roots of sum c_k z^k, with multiplicity, at ``dps`` digits.

    Seeds come from the eigenvalues of the double-precision companion matrix;
    they are refined jointly at working precision and then Newton-polished.
    """
    with mpmath.workdps(dps):
        c = [to_mpf(v) for v in coeffs_asc]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        n = len(c) - 1
        if n < 1:
            return []
        lead = c[-1]
        monic = [v / lead for v in c]
        try:
            with np.errstate(all="ignore"):
                comp = np.zeros((n, n), dtype=complex)
                comp[1:, :-1] = np.eye(n - 1)
                comp[:, -1] = [-complex(v) for v in monic[:-1]]
                seeds = np.linalg.eigvals(comp)
            if not np.all(np.isfinite(seeds)):
                raise ValueError
        except (ValueError, OverflowError, np.linalg.LinAlgError):
            radius = max(abs(v) for v in monic[:-1]) ** (mpmath.mpf(1) / n)
            seeds = [complex(radius * mpmath.expj(2 * mpmath.pi * (k + 0.25) / n)) for k in range(n)]
        # separate coincident seeds so the Aberth correction stays finite
        seeds = [complex(s) + 1e-12 * (k + 1) * (1 + 1j) for k, s in enumerate(seeds)]
        desc = list(reversed(monic))
        roots, ok = _aberth(desc, seeds, dps)
        if not ok:
            worst = max(roots, key=lambda r: abs(mpmath.polyval(desc, r)))
            raise RootFindingError(f"root refinement did not converge near {mpmath.nstr(worst, 8)}", worst)
        dpoly = [v * (n - i) for i, v in enumerate(desc[:-1])]
        polished = []
        for r in roots:
            for _ in range(8):
                d = mpmath.polyval(dpoly, r)
                if d == 0:
                    break
                step = mpmath.polyval(desc, r) / d
                r -= step
                if abs(step) <= abs(r) * mpmath.mpf(10) ** (-dps):
                    break
            polished.append(r)
        return polished


def poles_and_residues(pa: PadeApproximant, dps: int | None = None) -> list[PoleData]:
    """Roots of q with residues p(z0)/q'(z0)."""
    if pa.M < 1:
        raise ValueError("approximant has no poles (M = 0)")
    dps = dps or pa.dps or DEFAULT_DPS
    with mpmath.workdps(dps):
        p = [to_mpf(v) for v in pa.p]
        q = [to_mpf(v) for v in pa.q]
        roots = polynomial_roots(q, dps)
        pdesc = list(reversed(p))
        qdesc = list(reversed(q))
        dq = [v * (len(qdesc) - 1 - i) for i, v in enumerate(qdesc[:-1])]
        out = []
        for r in roots:
            d = mpmath.polyval(dq, r)
            res = mpmath.polyval(pdesc, r) / d if d != 0 else mpmath.mpc(mpmath.inf)
            out.append(PoleData(mpmath.mpc(r), mpmath.mpc(res)))
        return out


def nearest_pole(poles: Iterable[PoleData], target=1) -> PoleData:
    return min(poles, key=lambda pd: abs(pd.location - target))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    range: tuple[float, float]

    @property
    def peak(self) -> float:
        i = int(np.argmax(self.counts))
        return 0.5 * (self.edges[i] + self.edges[i + 1])

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])


def histogram(locations: Sequence[float], bins: int, lo: float, hi: float) -> Histogram:
    vals = np.asarray([v for v in locations if lo <= v <= hi], dtype=float)
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    return Histogram(edges, counts, int(counts.sum()), (lo, hi))


def dominant_peak(locations: Sequence[float], lo: float, hi: float, bins: int = 100,
                  levels: int = 3, zoom: int = 10) -> list[Histogram]:
    """Successively finer histograms zoomed on the most populated bin.

    Each level spans the previous peak bin plus one neighbour on each side,
    split into ``3*zoom`` bins.
    """
    out = [histogram(locations, bins, lo, hi)]
    for _ in range(levels - 1):
        h = out[-1]
        centre, w = h.peak, h.width
        out.append(histogram(locations, 3 * zoom, centre - 1.5 * w, centre + 1.5 * w))
    return out


@dataclass(frozen=True)
class PoleRecord:
    order: int
    location: complex
    residue: complex


def _poles_for_order(args):
    ode, order, transform, dps = args
    with mpmath.workdps(dps):
        extra = 1 if transform == "log-derivative" else 0
        # derive_coefficients(ode, K) yields K Borel coefficients
        B = borel_transform(derive_coefficients(ode, 2 * order + 1 + extra))
        coeffs = list(B.coeffs)
        if transform == "log-derivative":
            coeffs = log_derivative_coeffs(coeffs)
        coeffs = coeffs[: 2 * order + 1]
        pa = pade(coeffs, order, order)
        if pa.M < 1:
            return order, []
        return order, [PoleRecord(order, complex(p.location), complex(p.residue))
                       for p in poles_and_residues(pa, dps)]


def pole_histogram(ode: NormalFormODE, orders: Iterable[int], bins: int = 100,
                   transform: str = "none", window: tuple[float, float] | None = None,
                   imag_cut: float = 0.1, dps: int = DEFAULT_DPS, workers: int = 1):
    """Pool the poles of diagonal Borel-Pade approximants over many truncations.

    Each order N gives the diagonal [N/N] approximant built from the first
    2N+1 Borel coefficients (of the log-derivative when ``transform`` is
    ``"log-derivative"``).  Poles with
    |Im z| > ``imag_cut`` or Re z outside ``window`` are not counted.

    Returns ``(histogram, records, failed_orders)``.
    """
    if transform not in ("none", "log-derivative"):
        raise ValueError(f"unknown transform {transform!r}")
    orders = list(orders)
    if not orders:
        raise ValueError("no orders given")
    lo, hi = window if window is not None else (0.0, float(max(orders) + 1))
    jobs = [(ode, n, transform, dps) for n in orders]
    results = []
    failed = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_poles_for_order, j) for j in jobs]
            for n, fut in zip(orders, futures):
                try:
                    results.append(fut.result())
                except (PadeError, RootFindingError, ZeroDivisionError, ValueError) as exc:
                    failed.append((n, str(exc)))
    else:
        for n, j in zip(orders, jobs):
            try:
                results.append(_poles_for_order(j))
            except (PadeError, RootFindingError, ZeroDivisionError, ValueError) as exc:
                failed.append((n, str(exc)))
    if failed:
        warnings.warn(f"{len(failed)} order(s) skipped in pole histogram: {failed}", RuntimeWarning)
    records = [r for _, recs in sorted(results) for r in recs]
    kept = [r.location.real for r in records if abs(r.location.imag) <= imag_cut]
    return histogram(kept, bins, lo, hi), records, failed
