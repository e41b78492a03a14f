"""Borel-plane approximants with a prescribed singularity lattice.

The approximant is

    P(z) = c(z) / D(z),   D(z) = prod_{n=1}^{N'} (1 - z/(n lam))^beta,

with beta = 1 (simple poles) or beta = 1/2 (square-root branch points) and
c a polynomial of degree N.  Up to the constant prod (n lam)^beta this is
c(z) / prod (n lam - z)^beta.  The N+1 coefficients of c are fixed by
matching the first N+1 Borel coefficients, which is a triangular problem
because D(0) = 1.

Square roots use the branch sqrt(n lam - (z + i0)): for real z above a
lattice point the factor is -i sqrt(z - n lam).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .pade import DEFAULT_DPS, to_mpf
from .series import BorelSeries, to_fraction

KINDS = ("pole", "sqrt-branch")
_BETA = {"pole": Fraction(1), "sqrt-branch": Fraction(1, 2)}


class SingularPointError(ValueError):
    pass


def _series_power_of_lattice(N_prime: int, lam: Fraction, beta: Fraction, count: int) -> list[Fraction]:
    """Taylor coefficients of prod_{n<=N'} (1 - z/(n lam))^beta through z^(count-1).

    Uses g'/g = -beta * sum_k p_{k+1} z^k with power sums p_k = sum_n (n lam)^-k.
    """
    if count <= 0:
        return []
    inv = [1 / (n * lam) for n in range(1, N_prime + 1)]
    pk = [Fraction(0)] * (count + 1)
    cur = [Fraction(1)] * N_prime
    for k in range(1, count + 1):
        cur = [c * v for c, v in zip(cur, inv)]
        pk[k] = sum(cur, Fraction(0))
    h = [-beta * pk[k + 1] for k in range(count)]
    g = [Fraction(1)] + [Fraction(0)] * (count - 1)
    for j in range(1, count):
        g[j] = sum((g[i] * h[j - 1 - i] for i in range(j)), Fraction(0)) / j
    return g


def _mul_trunc(a: Sequence, b: Sequence, n: int) -> list:
    out = [Fraction(0)] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j, bj in enumerate(b[: n - i]):
                out[i + j] += ai * bj
    return out


@dataclass(frozen=True)
class ResurgentApproximant:
    """``c(z) / prod (1 - z/(n lam))^beta`` with exact rational ``c``."""

    kind: str
    c: tuple[Fraction, ...]
    N_prime: int
    lam: Fraction = Fraction(1)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.N_prime < 1:
            raise ValueError("N_prime must be >= 1")

    @property
    def N(self) -> int:
        return len(self.c) - 1

    @property
    def beta(self) -> Fraction:
        return _BETA[self.kind]

    def taylor(self, count: int) -> list[Fraction]:
        """First ``count`` Taylor coefficients at z = 0 (exact)."""
        inv = _series_power_of_lattice(self.N_prime, self.lam, -self.beta, count)
        return _mul_trunc(list(self.c), inv, count)

    def numerator(self, z):
        return mpmath.polyval([to_mpf(v) for v in reversed(self.c)], z)

    def _factor(self, n: int, z):
        w = 1 - z / (n * to_mpf(self.lam))
        if self.kind == "pole":
            return w
        if isinstance(w, mpmath.mpc) and w.imag != 0:
            return mpmath.sqrt(w)
        w = mpmath.re(w)
        # real axis approached from above: 1 - (z + i0)/(n lam) sits just below the cut
        return mpmath.sqrt(w) if w >= 0 else mpmath.mpc(0, -1) * mpmath.sqrt(-w)

    def __call__(self, z):
        return evaluate(self, z)

    def local_coefficient(self, m: int, dps: int = DEFAULT_DPS):
        """Coefficient of the leading singular term at ``z = m lam``.

        Pole kind: ``c_m = -Res_{z=m lam} P``, so P ~ c_m/(m lam - z).
        Branch kind: ``c_m = lim sqrt(m lam - z) P(z)`` from below the point.
        Pole kind is exact (Fraction); branch kind returns an mpc.
        """
        if not 1 <= m <= self.N_prime:
            raise SingularPointError(f"z = {m}*lambda is not a lattice point of this approximant")
        z = m * self.lam
        num = sum((cv * z**i for i, cv in enumerate(self.c)), Fraction(0))
        if self.kind == "pole":
            rest = Fraction(1)
            for n in range(1, self.N_prime + 1):
                if n != m:
                    rest *= 1 - Fraction(m, n)
            return num * z / rest
        with mpmath.workdps(dps):
            rest = mpmath.mpc(1)
            for n in range(1, self.N_prime + 1):
                if n != m:
                    rest *= self._factor(n, to_mpf(z))
            return to_mpf(num) * mpmath.sqrt(to_mpf(z)) / rest

    def to_json(self, dps: int = 30) -> str:
        return json.dumps({
            "kind": self.kind,
            "lambda": str(self.lam),
            "N": self.N,
            "Nprime": self.N_prime,
            "c": [mpmath.nstr(to_mpf(v), dps) for v in self.c],
            "c_exact": [str(v) for v in self.c],
            "precision": dps,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResurgentApproximant":
        d = json.loads(text)
        return cls(d["kind"], tuple(Fraction(v) for v in d["c_exact"]), int(d["Nprime"]), Fraction(d["lambda"]))


def _as_coeffs(B) -> list[Fraction]:
    if isinstance(B, BorelSeries):
        return list(B.coeffs)
    return [to_fraction(v) if not isinstance(v, Fraction) else v for v in B]


def build_approximant(B: BorelSeries | Sequence, kind: str, N_prime: int, lam=1,
                      N: int | None = None) -> ResurgentApproximant:
    """Match the approximant's Taylor series to ``B`` through ``z^N``.

    By default ``N = len(B) - 1`` so every supplied coefficient is used.
    """
    coeffs = _as_coeffs(B)
    N = len(coeffs) - 1 if N is None else N
    if N < 0 or N + 1 > len(coeffs):
        raise ValueError(f"need {N + 1} Borel coefficients, have {len(coeffs)}")
    if N_prime < 1:
        raise ValueError("N_prime must be >= 1")
    lam = to_fraction(lam)
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    D = _series_power_of_lattice(N_prime, lam, _BETA[kind], N + 1)
    c = _mul_trunc(coeffs[: N + 1], D, N + 1)
    return ResurgentApproximant(kind, tuple(c), N_prime, lam)


def evaluate(ra: ResurgentApproximant, z, dps: int = DEFAULT_DPS):
    """Value of the approximant at ``z`` (real z is taken at z + i0)."""
    with mpmath.workdps(dps):
        z = mpmath.mpmathify(z)
        den = mpmath.mpf(1)
        for n in range(1, ra.N_prime + 1):
            den *= ra._factor(n, z)
        if den == 0:
            raise SingularPointError(f"z = {z} is a lattice singularity")
        return ra.numerator(z) / den


def realified(ra: ResurgentApproximant, z, dps: int = DEFAULT_DPS):
    """Re + Im of the approximant at real ``z`` (the value itself below lam)."""
    v = evaluate(ra, z, dps)
    if isinstance(v, mpmath.mpc):
        return v.real + v.imag
    return v


@dataclass(frozen=True)
class RatioEntry:
    index: int              # 1-based Borel index j (coefficient of z^(j-1))
    predicted: Fraction
    exact: Fraction
    ratio: Fraction | None  # None when the exact coefficient vanishes


@dataclass(frozen=True)
class RatioReport:
    entries: tuple[RatioEntry, ...]

    @property
    def ratios(self) -> list[float]:
        return [float(e.ratio) for e in self.entries if e.ratio is not None]

    @property
    def first(self) -> RatioEntry:
        return self.entries[0]

    def to_rows(self) -> list[tuple]:
        return [(e.index, float(e.predicted), float(e.exact),
                 "" if e.ratio is None else float(e.ratio)) for e in self.entries]


def predicted_ratios(ra: ResurgentApproximant, exactB: BorelSeries | Sequence) -> RatioReport:
    """Compare Taylor coefficients beyond the matched range with exact ones."""
    exact = _as_coeffs(exactB)
    if len(exact) <= ra.N + 1:
        raise ValueError("exact series must extend beyond the matched coefficients")
    pred = ra.taylor(len(exact))
    entries = []
    for j in range(ra.N + 1, len(exact)):
        e = exact[j]
        entries.append(RatioEntry(j + 1, pred[j], e, None if e == 0 else pred[j] / e))
    return RatioReport(tuple(entries))


def select_pole_count(B: BorelSeries | Sequence, kind: str, lam=1,
                      search: Iterable[int] | None = None) -> int:
    """Pick N' minimising |first predicted ratio - 1|.

    ``B`` holds N+2 coefficients: N+1 are matched and the last one is the
    test coefficient.  The default search range is N..16N; ties go to the
    smaller N'.
    """
    coeffs = _as_coeffs(B)
    N = len(coeffs) - 2
    if N < 0:
        raise ValueError("need at least two Borel coefficients")
    search = list(range(max(N, 1), 16 * max(N, 1) + 1)) if search is None else sorted(set(search))
    if not search:
        raise ValueError("empty N' search range")
    test = coeffs[N + 1]
    best, best_dev = None, None
    for Np in search:
        ra = build_approximant(coeffs[: N + 1], kind, Np, lam)
        pred = ra.taylor(N + 2)[N + 1]
        if test == 0:
            dev = abs(pred)
        else:
            dev = abs(pred / test - 1)
        if best_dev is None or dev < best_dev:
            best, best_dev = Np, dev
    return best
