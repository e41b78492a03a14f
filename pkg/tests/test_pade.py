from fractions import Fraction
from math import comb, factorial

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from resurge.pade import (dominant_peak, log_derivative_coeffs, nearest_pole, pade, pole_histogram,
                          poles_and_residues, polynomial_roots)
from resurge.series import builtin_ode


def series_divide(p, q, n):
    """Independent long division p/q -> first n Taylor coefficients."""
    p = list(p) + [0] * n
    out = []
    for k in range(n):
        s = p[k] - sum(q[j] * out[k - j] for j in range(1, min(k, len(q) - 1) + 1))
        out.append(s / q[0])
    return out


def half_power_coeffs(n):
    # 1/sqrt(1-z): binom(2k, k)/4^k
    return [Fraction(comb(2 * k, k), 4**k) for k in range(n)]


def perturbed_power(b, n):
    """Coefficients of (2 + e^z) (1 - z)^-b."""
    base = [Fraction(1)]
    for k in range(1, n):
        base.append(base[-1] * (b + k - 1) / k)
    g = [Fraction(3)] + [Fraction(1, factorial(k)) for k in range(1, n)]
    return [sum(g[i] * base[k - i] for i in range(k + 1)) for k in range(n)]


@pytest.mark.parametrize("L", range(1, 6))
def test_geometric_reconstruction(L):
    pa = pade([1] * (2 * L + 1), L, L)
    assert pa.exact
    assert pa.p == (1,) and pa.q == (1, -1)


def test_polynomial_identity():
    pa = pade([1, 3, 0, 0], 1, 0)
    assert pa.p == (1, 3) and pa.q == (1,)


def test_simple_list_reexpansion(simple_borel):
    c = list(simple_borel.coeffs[:9])
    pa = pade(c, 4, 4)
    assert series_divide(pa.p, pa.q, 9) == c
    assert pa.taylor(9) == c


@given(st.lists(st.fractions(-20, 20, max_denominator=12), min_size=7, max_size=7),
       st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_reexpansion_exact(c, M):
    assume(c[0] != 0)
    L = 6 - M
    pa = pade(c, L, M)
    assert pa.taylor(7) == c


@given(st.lists(st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-3), min_size=9, max_size=9))
@settings(max_examples=40, deadline=None)
def test_reexpansion_float(c):
    pa = pade(c, 4, 4, dps=50, exact=False)
    with mpmath.workdps(50):
        got = pa.taylor(9)
        for a, b in zip(got, c):
            assert abs(a - b) <= mpmath.mpf(10) ** -30 * max(1, abs(b))


def test_degenerate_system_falls_back():
    # 1 + z^2 has a singular [1/1] system
    pa = pade([1, 0, 1], 1, 1)
    assert pa.taylor(3) == [1, 0, 1]


def test_log_derivative_of_half_power():
    out = log_derivative_coeffs(half_power_coeffs(12))
    assert out == [Fraction(1, 2)] * 11


def test_log_derivative_of_constant():
    assert log_derivative_coeffs([1, 0, 0, 0, 0]) == [0] * 4


def test_log_derivative_of_geometric():
    assert log_derivative_coeffs([1] * 10) == [1] * 9


def test_log_derivative_pade_is_exact():
    pa = pade(log_derivative_coeffs(half_power_coeffs(12))[:5], 2, 2)
    assert pa.p == (Fraction(1, 2),) and pa.q == (1, -1)


def test_residue_of_unit_pole():
    pa = pade([1] * 5, 2, 2)
    (pd,) = poles_and_residues(pa)
    assert abs(pd.location - 1) < 1e-50 and abs(pd.residue + 1) < 1e-50


def test_residue_of_half_pole():
    pa = pade([Fraction(1, 2)] * 5, 2, 2)
    (pd,) = poles_and_residues(pa)
    assert abs(pd.residue + Fraction(1, 2).__float__()) < 1e-50
    assert pd.b_estimate == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("b", [Fraction(1, 2), Fraction(1, 3)])
def test_residue_exponent_law(b):
    errs = []
    for order in (3, 5, 8):
        c = log_derivative_coeffs(perturbed_power(b, 2 * order + 2))[: 2 * order + 1]
        pa = pade(c, order, order, dps=60, exact=False)
        pd = nearest_pole(poles_and_residues(pa), 1)
        errs.append(abs(pd.residue + mpmath.mpf(b.numerator) / b.denominator))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-12


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=9).filter(lambda c: abs(c[-1]) > 0.1))
@settings(max_examples=40, deadline=None)
def test_roots_rebuild_polynomial(c):
    with mpmath.workdps(40):
        roots = polynomial_roots(c, 40)
        assert len(roots) == len(c) - 1
        # Vieta: c_n * prod (z - r) expanded back to ascending coefficients
        poly = [mpmath.mpc(c[-1])]
        for r in roots:
            poly = [-r * poly[0]] + [poly[k - 1] - r * poly[k] for k in range(1, len(poly))] + [poly[-1]]
        size = sum(abs(v) for v in c)
        for a, b in zip(poly, c):
            assert abs(a - b) <= 1e-25 * size


def test_euler_poles_all_at_one():
    hist, records, failed = pole_histogram(builtin_ode("euler"), range(2, 9), bins=50)
    assert not failed
    assert records and all(abs(r.location - 1) < 1e-40 for r in records)
    assert np.count_nonzero(hist.counts) == 1


@pytest.fixture(scope="module")
def simple_poles():
    hist, records, failed = pole_histogram(builtin_ode("ode-simple"), range(5, 26))
    return hist, [r.location.real for r in records if abs(r.location.imag) <= 0.1]


def test_simple_histogram_peak(simple_poles):
    hist, locs = simple_poles
    assert abs(dominant_peak(locs, *hist.range)[-1].peak - 1) < 1e-3


def test_histogram_stability_under_bin_doubling(simple_poles):
    hist, locs = simple_poles
    for bins in (50, 100, 200):
        a = dominant_peak(locs, *hist.range, bins=bins)[-1]
        b = dominant_peak(locs, *hist.range, bins=2 * bins)[-1]
        assert abs(a.peak - b.peak) <= max(a.width, b.width)


def test_branch_log_derivative_peak():
    hist, records, _ = pole_histogram(builtin_ode("ode-branch"), range(5, 26), transform="log-derivative")
    locs = [r.location.real for r in records if abs(r.location.imag) <= 0.1]
    assert abs(dominant_peak(locs, *hist.range)[-1].peak - 1) < 1e-2


def test_unknown_transform():
    with pytest.raises(ValueError):
        pole_histogram(builtin_ode("euler"), [3], transform="square")
