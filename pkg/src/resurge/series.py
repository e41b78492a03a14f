"""Normal-form ODEs and their formal asymptotic series.

The ODEs handled here have the shape

    y' = -lam*y - A*y/x + f(x) + sum_{n>=2, m>=0} k_{nm} y^n x^{-m},
    f(x) = sum_{m>=1} f_m x^{-m},

and the decaying formal solution y ~ sum_{n>=1} a_n x^{-n}.  All series
arithmetic is exact over :class:`fractions.Fraction`.

The Borel function used throughout the package is

    Y(z) = sum_{n>=1} B_n z^{n-1},   B_n = a_n / (n-1)!,

so that the Laplace integral of z^{n-1}/(n-1)! returns x^{-n}.  With this
indexing the Euler series maps to 1/(1-z).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from math import factorial
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ResonanceError",
    "SpecError",
    "NormalFormODE",
    "AsymptoticSeries",
    "BorelSeries",
    "SingularityModel",
    "to_fraction",
    "derive_coefficients",
    "borel_transform",
    "ode_residual",
    "singularity_exponent",
    "load_ode",
    "parse_ode",
    "builtin_ode",
    "BUILTIN_ODES",
]

BUILTIN_ODES = ("euler", "euler-half", "ode-simple", "ode-cubic", "ode-branch", "prototype")


class ResonanceError(ArithmeticError):
    """A coefficient equation has a vanishing linear coefficient."""

    def __init__(self, order: int):
        super().__init__(f"resonant coefficient equation at order {order}")
        self.order = order


class SpecError(ValueError):
    """Malformed ODE specification."""


def to_fraction(value) -> Fraction:
    """Parse ``int``, ``Fraction`` or a ``"p/q"`` string into a Fraction.

    Floats are rejected: every ODE constant must be exact.
    """
    if isinstance(value, bool):
        raise SpecError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"not a rational: {value!r}") from exc
    raise SpecError(f"not a rational: {value!r} (use a 'p/q' string)")


@dataclass(frozen=True)
class NormalFormODE:
    lam: Fraction
    a_lin: Fraction = Fraction(0)
    forcing: Mapping[int, Fraction] = field(default_factory=dict)
    nonlinear: tuple[tuple[int, int, Fraction], ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lam", to_fraction(self.lam))
        object.__setattr__(self, "a_lin", to_fraction(self.a_lin))
        forcing = {int(m): to_fraction(v) for m, v in dict(self.forcing).items()}
        nonlinear = tuple((int(n), int(m), to_fraction(k)) for n, m, k in self.nonlinear)
        if self.lam <= 0:
            raise SpecError("lambda must be positive")
        if any(m < 1 for m in forcing):
            raise SpecError("forcing powers must be >= 1")
        for n, m, _ in nonlinear:
            if n < 2 or m < 0:
                raise SpecError(f"nonlinear term y^{n} x^-{m} is not allowed (need n >= 2, m >= 0)")
        object.__setattr__(self, "forcing", forcing)
        object.__setattr__(self, "nonlinear", nonlinear)

    def rhs(self, x: float, y: float) -> float:
        """Evaluate the right-hand side in floating point."""
        val = -float(self.lam) * y - float(self.a_lin) * y / x
        for m, fm in self.forcing.items():
            val += float(fm) * x ** (-m)
        for n, m, k in self.nonlinear:
            val += float(k) * y**n * x ** (-m)
        return val

    def to_json(self) -> dict:
        return {
            "lambda": str(self.lam),
            "A": str(self.a_lin),
            "forcing": {str(m): str(v) for m, v in sorted(self.forcing.items())},
            "nonlinear": [{"n": n, "m": m, "k": str(k)} for n, m, k in self.nonlinear],
        }


@dataclass(frozen=True)
class AsymptoticSeries:
    """Coefficients ``a_0 .. a_N`` of ``sum a_n x^-n``."""

    coeffs: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n]

    def truncate(self, order: int) -> "AsymptoticSeries":
        if order > self.order:
            raise ValueError(f"series only known to order {self.order}")
        return AsymptoticSeries(self.coeffs[: order + 1])


@dataclass(frozen=True)
class BorelSeries:
    """Coefficients ``B_1 .. B_N``; ``coeffs[k]`` multiplies ``z**k``."""

    coeffs: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def B(self, n: int) -> Fraction:
        """``B_n`` with the 1-based index used for ``a_n``."""
        return self.coeffs[n - 1]

    def truncate(self, order: int) -> "BorelSeries":
        if order > self.order:
            raise ValueError(f"Borel series only known to order {self.order}")
        return BorelSeries(self.coeffs[:order])

    def to_asymptotic(self) -> AsymptoticSeries:
        return AsymptoticSeries((Fraction(0),) + tuple(b * factorial(n) for n, b in enumerate(self.coeffs)))


@dataclass(frozen=True)
class SingularityModel:
    spacing: Fraction
    b: float
    kind: str  # "simple-pole" | "branch"

    def __post_init__(self):
        if self.kind not in ("simple-pole", "branch"):
            raise ValueError(f"unknown singularity kind {self.kind!r}")
        if self.kind == "simple-pole" and self.b != 1:
            raise ValueError("simple-pole requires b == 1")
        if self.kind == "branch" and not 0 < self.b < 1:
            raise ValueError("branch requires 0 < b < 1")


def _mul_trunc(u: Sequence[Fraction], v: Sequence[Fraction], n: int) -> list[Fraction]:
    out = [Fraction(0)] * n
    for i, ui in enumerate(u[:n]):
        if ui:
            for j in range(min(len(v), n - i)):
                out[i + j] += ui * v[j]
    return out


def derive_coefficients(ode: NormalFormODE, N: int) -> AsymptoticSeries:
    """Solve for ``a_1 .. a_N`` order by order.

    Matching the coefficient of x^-(n+1) gives

        lam * a_{n+1} = (n - A) a_n + f_{n+1} + sum k_{jm} [y^j]_{n+1-m},

    where [y^j]_p only involves a_1 .. a_{p-j+1}, so the system is triangular.
    Powers of y are rebuilt incrementally as each new a_n is fixed.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if ode.lam == 0:
        raise ResonanceError(1)
    a = [Fraction(0)] * (N + 1)
    powers = sorted({n for n, _, _ in ode.nonlinear})
    for n in range(N):
        rhs = (n - ode.a_lin) * a[n] + ode.forcing.get(n + 1, Fraction(0))
        if powers:
            # y^j coefficients through x^-(n+1); a_{n+1} cannot enter since j >= 2
            pw = {1: a[: n + 2]}
            cur = a[: n + 2]
            for j in range(2, powers[-1] + 1):
                cur = _mul_trunc(cur, a[: n + 2], n + 2)
                pw[j] = cur
            for j, m, k in ode.nonlinear:
                p = n + 1 - m
                if p >= 0:
                    rhs += k * pw[j][p]
        a[n + 1] = rhs / ode.lam
    return AsymptoticSeries(tuple(a))


def borel_transform(series: AsymptoticSeries) -> BorelSeries:
    """``B_n = a_n / (n-1)!`` for ``n = 1 .. N``."""
    if series.order < 1:
        raise ValueError("series order must be >= 1")
    out = []
    fact = 1
    for n in range(1, series.order + 1):
        if n > 1:
            fact *= n - 1
        out.append(Fraction(series.coeffs[n]) / fact)
    return BorelSeries(tuple(out))


def ode_residual(ode: NormalFormODE, series: AsymptoticSeries, order: int | None = None) -> list[Fraction]:
    """Coefficients r_0 .. r_order of y' - RHS after substituting the series.

    Independent of :func:`derive_coefficients`: the full polynomial products
    are expanded and then compared, rather than solved order by order.
    """
    a = list(series.coeffs)
    order = series.order + 1 if order is None else order
    size = order + 1
    a = (a + [Fraction(0)] * size)[:size]
    lhs = [Fraction(0)] * size
    for n in range(1, size - 1):
        lhs[n + 1] -= n * a[n]
    rhs = [Fraction(0)] * size
    for n in range(size):
        rhs[n] -= ode.lam * a[n]
        if n + 1 < size:
            rhs[n + 1] -= ode.a_lin * a[n]
    for m, fm in ode.forcing.items():
        if m < size:
            rhs[m] += fm
    for j, m, k in ode.nonlinear:
        pw = list(a)
        for _ in range(j - 1):
            pw = _mul_trunc(pw, a, size)
        for p in range(size - m):
            rhs[p + m] += k * pw[p]
    return [l - r for l, r in zip(lhs, rhs)]


def singularity_exponent(ode: NormalFormODE) -> Fraction:
    """Exponent b of the leading Borel singularity (1 - z/lam)^-b.

    Linearising around the formal solution, the y^2 x^0 term feeds a
    2*k_20*a_1/x contribution into the effective A, with a_1 = f_1/lam.
    Hence b = 1 - A + 2*k_20*f_1/lam.  For odes without a y^2 x^0 term
    this reduces to b = 1 - A.
    """
    a1 = ode.forcing.get(1, Fraction(0)) / ode.lam
    k20 = sum((k for n, m, k in ode.nonlinear if n == 2 and m == 0), Fraction(0))
    return 1 - (ode.a_lin - 2 * k20 * a1)


def parse_ode(data: Mapping, name: str = "") -> NormalFormODE:
    if not isinstance(data, Mapping):
        raise SpecError("ODE spec must be a JSON object")
    unknown = set(data) - {"lambda", "A", "forcing", "nonlinear", "name", "description"}
    if unknown:
        raise SpecError(f"unknown keys in ODE spec: {sorted(unknown)}")
    if "lambda" not in data:
        raise SpecError("ODE spec needs 'lambda'")
    forcing = data.get("forcing", {})
    if not isinstance(forcing, Mapping):
        raise SpecError("'forcing' must map powers to rationals")
    try:
        forcing = {int(m): to_fraction(v) for m, v in forcing.items()}
        nonlinear = tuple(
            (int(t["n"]), int(t["m"]), to_fraction(t["k"])) for t in data.get("nonlinear", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad ODE spec entry: {exc}") from exc
    return NormalFormODE(
        lam=to_fraction(data["lambda"]),
        a_lin=to_fraction(data.get("A", "0")),
        forcing=forcing,
        nonlinear=nonlinear,
        name=data.get("name", name),
    )


def load_ode(path: str | Path) -> NormalFormODE:
    """Load an ODE from a JSON spec file, or a built-in name like ``ode-simple``."""
    path = str(path)
    if path in BUILTIN_ODES:
        return builtin_ode(path)
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{p}: invalid JSON ({exc})") from exc
    return parse_ode(data, name=p.stem)


def builtin_ode(name: str) -> NormalFormODE:
    if name not in BUILTIN_ODES:
        raise SpecError(f"unknown built-in ODE {name!r}; choose from {', '.join(BUILTIN_ODES)}")
    text = resources.files("resurge").joinpath("odes", f"{name}.json").read_text()
    return parse_ode(json.loads(text), name=name)


def series_from_iterable(values: Iterable) -> AsymptoticSeries:
    return AsymptoticSeries(tuple(to_fraction(v) for v in values))
