"""Exact bookkeeping for Stokes-automorphism expansions.

Expressions are finite sums of monomials

    coeff * S^p * C^q * E^e * delta^k y_m^sigma,

where ``delta = G - 1`` is the Stokes automorphism minus the identity,
``y_m^sigma`` is the lateral (sigma = +/-) Borel sum of the m-th transseries
sector, ``S`` the Stokes constant, ``C`` the transseries parameter and
``E = exp(-lam*x)``.  All coefficients are Fractions.

The *order* of a monomial is ``k + m``: each application of ``delta`` and
each transseries sector costs one power of ``exp(-lam*x)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence

__all__ = [
    "Monomial",
    "DeltaExpression",
    "binomial",
    "stokes_power",
    "log_series",
    "compose",
    "averaging_weight",
    "balanced_average_identity",
    "bridge_equations",
    "solve_bridge_system",
    "MedianCoefficientTable",
    "leading_sector_weight",
]


@dataclass(frozen=True, order=True)
class Monomial:
    k: int = 0          # power of delta
    m: int = 0          # transseries sector
    sigma: str = "+"    # lateral sum
    p: int = 0          # power of S
    q: int = 0          # power of C
    e: int = 0          # power of exp(-lam x)

    @property
    def order(self) -> int:
        return self.k + self.m

    def __str__(self) -> str:
        parts = []
        for sym, pw in (("S", self.p), ("C", self.q), ("E", self.e)):
            if pw == 1:
                parts.append(sym)
            elif pw:
                parts.append(f"{sym}^{pw}")
        d = "" if self.k == 0 else ("d" if self.k == 1 else f"d^{self.k}")
        parts.append(f"{d}y{self.m}{self.sigma}")
        return "*".join(parts)


def binomial(alpha: Fraction, n: int) -> Fraction:
    """Generalised binomial coefficient C(alpha, n)."""
    out = Fraction(1)
    for i in range(n):
        out *= (Fraction(alpha) - i) / (i + 1)
    return out


class DeltaExpression:
    """Linear combination of :class:`Monomial` with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                self.terms[mono] = self.terms.get(mono, Fraction(0)) + c
        self.terms = {k: v for k, v in self.terms.items() if v}

    @classmethod
    def atom(cls, k=0, m=0, sigma="+", p=0, q=0, e=0, coeff=1) -> "DeltaExpression":
        return cls({Monomial(k, m, sigma, p, q, e): Fraction(coeff)})

    @classmethod
    def operator(cls, coeffs: Sequence, m: int = 0, sigma: str = "+") -> "DeltaExpression":
        """``sum_j coeffs[j] delta^j`` acting on ``y_m^sigma``."""
        return cls({Monomial(j, m, sigma): Fraction(c) for j, c in enumerate(coeffs)})

    # arithmetic
    def __add__(self, other: "DeltaExpression") -> "DeltaExpression":
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return DeltaExpression(out)

    def __neg__(self) -> "DeltaExpression":
        return DeltaExpression({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "DeltaExpression") -> "DeltaExpression":
        return self + (-other)

    def scale(self, c, p=0, q=0, e=0) -> "DeltaExpression":
        """Multiply by ``c * S^p * C^q * E^e``."""
        c = Fraction(c)
        return DeltaExpression({
            Monomial(mo.k, mo.m, mo.sigma, mo.p + p, mo.q + q, mo.e + e): v * c
            for mo, v in self.terms.items()
        })

    __rmul__ = scale

    def __mul__(self, c):
        return self.scale(c)

    def apply_delta(self, times: int = 1) -> "DeltaExpression":
        return DeltaExpression({
            Monomial(mo.k + times, mo.m, mo.sigma, mo.p, mo.q, mo.e): v for mo, v in self.terms.items()
        })

    def apply_series(self, coeffs: Sequence) -> "DeltaExpression":
        """``sum_j coeffs[j] delta^j`` applied to this expression."""
        out = DeltaExpression()
        for j, c in enumerate(coeffs):
            if c:
                out = out + self.apply_delta(j).scale(c)
        return out

    def rewrite_minus(self) -> "DeltaExpression":
        """Eliminate lower sums using ``y^- = (1 + delta) y^+``."""
        out: dict[Monomial, Fraction] = {}
        for mo, v in self.terms.items():
            if mo.sigma == "-":
                for kk in (mo.k, mo.k + 1):
                    t = Monomial(kk, mo.m, "+", mo.p, mo.q, mo.e)
                    out[t] = out.get(t, Fraction(0)) + v
            else:
                out[mo] = out.get(mo, Fraction(0)) + v
        return DeltaExpression(out)

    def truncate(self, K: int) -> "DeltaExpression":
        """Drop monomials of order above ``K``."""
        return DeltaExpression({mo: v for mo, v in self.terms.items() if mo.order <= K})

    def coefficient(self, **fields) -> Fraction:
        return self.terms.get(Monomial(**fields), Fraction(0))

    def operator_coeffs(self, K: int, m: int = 0) -> list[Fraction]:
        """Coefficients of ``delta^0 .. delta^K`` on ``y_m^+`` (no S, C, E)."""
        return [self.coefficient(k=j, m=m) for j in range(K + 1)]

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, DeltaExpression):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __len__(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({v})*{mo}" for mo, v in sorted(self.terms.items()))

    __repr__ = __str__


def stokes_power(alpha, K: int) -> DeltaExpression:
    """``G^alpha = (1 + delta)^alpha`` acting on ``y_0^+``, through delta^K."""
    alpha = Fraction(alpha)
    return DeltaExpression.operator([binomial(alpha, j) for j in range(K + 1)])


def _mul_series(a: Sequence[Fraction], b: Sequence[Fraction], K: int) -> list[Fraction]:
    out = [Fraction(0)] * (K + 1)
    for i, ai in enumerate(a[: K + 1]):
        if ai:
            for j, bj in enumerate(b[: K + 1 - i]):
                out[i + j] += ai * bj
    return out


def log_series(K: int) -> list[Fraction]:
    """Coefficients of ``log(1 + delta)`` through delta^K."""
    return [Fraction(0)] + [Fraction((-1) ** (j + 1), j) for j in range(1, K + 1)]


def compose(a: DeltaExpression, b: DeltaExpression, K: int) -> DeltaExpression:
    """Product of two operator series in delta (both acting on ``y_0^+``)."""
    return DeltaExpression.operator(_mul_series(a.operator_coeffs(K), b.operator_coeffs(K), K))


def averaging_weight(p: int, q: int) -> Fraction:
    """lambda_{p,q} = (2p)! (2q)! / (4^(p+q) p! q! (p+q)!)."""
    return Fraction(factorial(2 * p) * factorial(2 * q),
                    4 ** (p + q) * factorial(p) * factorial(q) * factorial(p + q))


def balanced_average(K: int, m: int = 0) -> DeltaExpression:
    """Balanced average of the two lateral sums of ``y_m``.

        1/2 [ y^+ + sum_{n>=1} (-1)^(n-1) lambda_{n-1,1} delta^n y^+
                  + sum_{n>=0} (-1)^n lambda_{n,0} delta^n y^- ]
    """
    terms: dict[Monomial, Fraction] = {Monomial(0, m, "+"): Fraction(1, 2)}
    for n in range(1, K + 1):
        terms[Monomial(n, m, "+")] = Fraction((-1) ** (n - 1)) * averaging_weight(n - 1, 1) / 2
    for n in range(0, K + 1):
        terms[Monomial(n, m, "-")] = Fraction((-1) ** n) * averaging_weight(n, 0) / 2
    return DeltaExpression(terms)


def balanced_average_identity(K: int) -> DeltaExpression:
    """``G^(1/2) y^+`` minus the balanced average, after eliminating ``y^-``.

    Zero through delta^K when the averaging identity holds.
    """
    return (stokes_power(Fraction(1, 2), K) - balanced_average(K).rewrite_minus()).truncate(K)


def _half_power_on(m: int, K: int, pv_form: bool) -> DeltaExpression:
    """``G^(1/2) y_m^+`` through total order K.

    In ``pv_form`` the first two terms are written as the plain average
    ``(y^+ + y^-)/2``, which equals ``y^+ + delta y^+ / 2``.
    """
    coeffs = [binomial(Fraction(1, 2), j) for j in range(K - m + 1)]
    if not pv_form or len(coeffs) < 2:
        return DeltaExpression.operator(coeffs, m=m)
    rest = DeltaExpression.operator([0, 0] + coeffs[2:], m=m)
    avg = DeltaExpression.atom(m=m, sigma="+", coeff=Fraction(1, 2)) + \
        DeltaExpression.atom(m=m, sigma="-", coeff=Fraction(1, 2))
    return avg + rest


def bridge_equations(K: int = 4, shifts: bool = True) -> list[tuple[tuple[int, int], DeltaExpression, DeltaExpression]]:
    """Bridge relations between the perturbative sector and sector n.

    For n = 1..K the relation reads

        (log(1+delta))^n G^(1/2) y_0^+ = n! S^n E^n G^(1/2) y_n^+,

    and with ``shifts`` it is also acted on by delta^j for j = 1..K-n, which
    supplies one equation per unknown ``delta^k y_n^+`` with k + n <= K.
    Right-hand sides keep the averaged ``(y^+ + y^-)/2`` form; both sides are
    truncated at total order K.  Returns ``((n, j), lhs, rhs)`` triples.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    half = [binomial(Fraction(1, 2), j) for j in range(K + 1)]
    L = [Fraction(1)] + [Fraction(0)] * K
    out = []
    logs = log_series(K)
    for n in range(1, K + 1):
        L = _mul_series(L, logs, K)
        op = _mul_series(L, half, K)
        base_lhs = DeltaExpression.operator(op)
        base_rhs = _half_power_on(n, K, pv_form=True).scale(factorial(n), p=n, e=n)
        for j in range(0, (K - n if shifts else 0) + 1):
            lhs = base_lhs.apply_delta(j).truncate(K)
            rhs = base_rhs.apply_delta(j).truncate(K)
            out.append(((n, j), lhs, rhs))
    return out


def _solve_linear(matrix: list[list[Fraction]], rhs: list[DeltaExpression]) -> list[DeltaExpression]:
    n = len(matrix)
    A = [row[:] for row in matrix]
    b = list(rhs)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("bridge system is singular")
        A[col], A[piv] = A[piv], A[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        b[col] = b[col].scale(inv)
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
                b[r] = b[r] - b[col].scale(f)
    return b


def solve_bridge_system(K: int = 4) -> "MedianCoefficientTable":
    """Express every ``delta^k y_n^+`` through ``delta^j y_0^+`` and assemble

        y_med = sum_n C^n E^n G^(1/2) y_n^+,

    truncated below delta^K.  The result is tabulated by powers of C.
    """
    eqs = bridge_equations(K)
    unknowns = [(n, k) for n in range(1, K + 1) for k in range(0, K - n + 1)]
    index = {u: i for i, u in enumerate(unknowns)}
    if len(eqs) != len(unknowns):
        raise ArithmeticError("bridge system is not square")
    matrix, rhs = [], []
    for (n, j), lhs, r in eqs:
        r = r.rewrite_minus().truncate(K)
        row = [Fraction(0)] * len(unknowns)
        for mo, v in r.terms.items():
            # strip the common n! S^n E^n factor: unknown v_{n,k} = n! S^n E^n delta^k y_n^+
            if mo.m == 0:
                raise ArithmeticError("unexpected perturbative term on the right-hand side")
            row[index[(mo.m, mo.k)]] += v / factorial(mo.m)
        matrix.append(row)
        rhs.append(lhs)
    sol = _solve_linear(matrix, rhs)
    values = {u: sol[index[u]].scale(Fraction(1, factorial(u[0])), p=-u[0], e=-u[0]) for u in unknowns}

    med = _half_power_on(0, K - 1, pv_form=False)
    for n in range(1, K + 1):
        shell = _half_power_on(n, K, pv_form=False).scale(1, q=n, e=n)
        for mo, v in shell.terms.items():
            med = med + values[(mo.m, mo.k)].scale(v, q=mo.q, e=mo.e)
    med = DeltaExpression({mo: v for mo, v in med.terms.items() if mo.k < K})
    return MedianCoefficientTable.from_expression(med, K)


@dataclass(frozen=True)
class MedianCoefficientTable:
    """Coefficients of ``C^n delta^k S^-n`` in the median sum.

    ``raw[n][k]`` refers to ``delta^k y_0^+``.  ``primed[n][k]`` is the
    real-valued table after the substitution delta^k y_0 = i delta'^k y_0 and
    S = i S', with the residual phase i^(1-n) realified as Re + Im.
    The delta^0, delta^1 part of the C^0 row is the principal value and is
    stored separately as ``has_pv``.
    """

    K: int
    raw: tuple[tuple[Fraction, ...], ...]
    primed: tuple[tuple[Fraction, ...], ...]
    has_pv: bool = True

    @staticmethod
    def realified_phase(n: int) -> int:
        """Re + Im of i^(1-n)."""
        r = (1 - n) % 4
        return {0: 1, 1: 1, 2: -1, 3: -1}[r]

    @classmethod
    def from_expression(cls, med: DeltaExpression, K: int) -> "MedianCoefficientTable":
        raw = [[Fraction(0)] * K for _ in range(K + 1)]
        for mo, v in med.terms.items():
            if mo.m != 0 or mo.sigma != "+" or mo.e != 0 or mo.p != -mo.q:
                raise ArithmeticError(f"median sum not reduced: {mo}")
            raw[mo.q][mo.k] += v
        # C^0: delta^0 + delta/2 is the principal value (y^+ + y^-)/2
        if raw[0][0] != 1 or (K > 1 and raw[0][1] != Fraction(1, 2)):
            raise ArithmeticError("perturbative row does not start with the principal value")
        raw[0][0] = Fraction(0)
        if K > 1:
            raw[0][1] = Fraction(0)
        primed = [[v * cls.realified_phase(n) for v in row] for n, row in enumerate(raw)]
        return cls(K, tuple(map(tuple, raw)), tuple(map(tuple, primed)))

    def row(self, n: int, primed: bool = True) -> tuple[Fraction, ...]:
        return (self.primed if primed else self.raw)[n]

    def to_json(self) -> str:
        entries = [{"C": 0, "delta": 0, "S": 0, "coeff": "PV"}]
        for n, row in enumerate(self.primed):
            for k, v in enumerate(row):
                if v:
                    entries.append({"C": n, "delta": k, "S": -n, "coeff": str(v)})
        return json.dumps({"K": self.K, "terms": entries}, indent=2)

    def __str__(self) -> str:
        lines = []
        for n, row in enumerate(self.primed):
            parts = ["PV"] if n == 0 else []
            parts += [f"{v}*d'^{k}/S'^{n}" if n else f"{v}*d'^{k}" for k, v in enumerate(row) if v]
            lines.append(f"C^{n}: " + (" + ".join(parts) if parts else "0"))
        return "\n".join(lines)


def leading_sector_weight(k: int) -> Fraction:
    """Weight of the sector-k term in delta^k relative to delta^1.

    delta^k = (exp(dot Delta) - 1)^k; its first contribution in sector k is
    dot-Delta^k with coefficient 1, against 1/k! in delta^1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    # [t^k] (e^t - 1)^k / [t^k] (e^t - 1)
    exp_m1 = [Fraction(0)] + [Fraction(1, factorial(j)) for j in range(1, k + 1)]
    pw = [Fraction(1)] + [Fraction(0)] * k
    for _ in range(k):
        pw = _mul_series(pw, exp_m1, k)
    return pw[k] / exp_m1[k]
