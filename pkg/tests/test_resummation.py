import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import expi

from resurge.approximant import build_approximant, evaluate
from resurge.resummation import (PVIntegrator, _sector_polynomial, assemble_median, discontinuity_ladder,
                                 fit_transseries_constant, median_table, pv_laplace, resum)
from resurge.series import builtin_ode

EULER = build_approximant([1, 1], "pole", 1)


def ei_oracle(x):
    return math.exp(-x) * expi(x)


def upper_lateral(ra, x):
    """Laplace integral along a path just above the positive axis (mpmath contour)."""
    with mpmath.workdps(25):
        L = ra.N_prime + 1
        f = lambda z: mpmath.exp(-x * z) * evaluate(ra, z, 25)
        val = mpmath.quad(f, [0, 0.5j, L + 0.5j, L])
        return val + mpmath.quad(f, [L, L + 10, L + 40, mpmath.inf])


@pytest.mark.parametrize("x", [2.0, 5.0, 10.0, 20.0])
def test_pv_euler_oracle(x):
    assert abs(pv_laplace(EULER, x) - ei_oracle(x)) < 1e-10


def test_pv_euler_value_at_10():
    assert pv_laplace(EULER, 10.0) == pytest.approx(0.11315, abs=5e-6)


def test_pv_large_x_asymptotics():
    x = 50.0
    series = sum(math.factorial(n) / x ** (n + 1) for n in range(30))
    v = pv_laplace(EULER, x)
    assert abs(v - series) < 1e-14
    assert abs(v - (1 / x + 1 / x**2)) < 3 / x**3


def test_pv_of_zero():
    ra = build_approximant([0, 0, 0], "pole", 3)
    assert pv_laplace(ra, 4.0) == 0


def test_pv_vectorised_matches_scalar(simple_borel):
    ra = build_approximant(list(simple_borel.coeffs[:7]), "pole", 6)
    xs = np.array([3.0, 6.0, 11.0])
    vec = pv_laplace(ra, xs)
    assert np.allclose(vec, [pv_laplace(ra, x) for x in xs], atol=1e-11, rtol=0)


@pytest.mark.parametrize("x", [3.0, 7.0])
def test_pole_lateral_sum(simple_borel, x):
    ra = build_approximant(list(simple_borel.coeffs[:5]), "pole", 4)
    A = upper_lateral(ra, x)
    lad = discontinuity_ladder(ra)
    assert abs(pv_laplace(ra, x) - float(A.real)) < 1e-9
    # the upper lateral sum carries half the jump
    assert abs(float(A.imag) - lad(1, x) / 2) < 1e-9


@pytest.mark.parametrize("x", [3.0, 7.0])
def test_branch_realified_lateral_sum(branch_borel, x):
    ra = build_approximant(list(branch_borel.coeffs[:5]), "sqrt-branch", 4)
    A = upper_lateral(ra, x)
    assert abs(pv_laplace(ra, x) - float(A.real + A.imag)) < 1e-9


def test_ladder_single_pole():
    c = 3
    ra = build_approximant([c, c], "pole", 1)
    lad = discontinuity_ladder(ra)
    x = np.array([1.0, 4.0, 9.0])
    assert np.allclose(lad(1, x), 2 * np.pi * c * np.exp(-x), rtol=1e-14)
    assert np.all(lad(2, x) == 0) and np.all(lad(3, x) == 0)
    assert lad.all_higher_vanish


def test_ladder_zero():
    for kind in ("pole", "sqrt-branch"):
        lad = discontinuity_ladder(build_approximant([0, 0], kind, 2))
        assert all(np.all(lad(k, 5.0) == 0) for k in (1, 2, 3))


@pytest.mark.parametrize("x", [1.5, 4.0, 10.0])
def test_ladder_branch_normalisation(x):
    c = 0.75
    ra = build_approximant(["3/4"], "sqrt-branch", 1)
    lad = discontinuity_ladder(ra)
    # jump of c/sqrt(1 - z) across z > 1 is 2ic/sqrt(z - 1); Laplace it with u = z - 1 = t^2
    jump = quad(lambda t: 2 * c * math.exp(-x * (1 + t * t)) * 2, 0, np.inf)[0]
    assert abs(lad(1, x) - jump) < 1e-10
    assert abs(lad(1, x) - 2 * math.sqrt(math.pi) * c * math.exp(-x) / math.sqrt(x)) < 1e-14


def test_ladder_branch_higher_orders(branch_borel):
    ra = build_approximant(list(branch_borel.coeffs[:7]), "sqrt-branch", 6)
    lad = discontinuity_ladder(ra)
    for k in (2, 3):
        (term,) = lad.orders[k - 1]
        assert term.m == k and term.power == 0.5


@pytest.mark.parametrize("C, x", [(0.0, 3.0), (0.4, 6.0), (-1.3, 10.0), (2.0, 15.0)])
def test_euler_median_oracle(C, x):
    lad = discontinuity_ladder(EULER)
    val = assemble_median(EULER, lad, median_table(4), C, x)
    assert abs(val - (ei_oracle(x) + C * 2 * np.pi * np.exp(-x))) < 1e-10


def test_pole_collapse(simple_borel):
    ra = build_approximant(list(simple_borel.coeffs[:9]), "pole", 8)
    lad = discontinuity_ladder(ra)
    x = np.linspace(4, 20, 9)
    T = _sector_polynomial(lad, median_table(4), x)
    assert np.all(T[0] == 0) and np.all(T[2] == 0) and np.all(T[3] == 0)
    assert np.all(lad(2, x) == 0) and np.all(lad(3, x) == 0)
    pv = pv_laplace(ra, x)
    C = -0.7
    assert np.allclose(assemble_median(ra, lad, median_table(4), C, x, pv=pv), pv + C * lad(1, x),
                       rtol=0, atol=1e-15)


def _complex_assembly(lad, table, C, x, pv):
    """Sum with the raw table, S = i and delta^k y_0 = i * d'^k (S' = 1)."""
    total = complex(pv)
    for n, row in enumerate(table.raw):
        for k, v in enumerate(row):
            if v and k >= 1:
                total += float(v) * C**n * (1j) ** (-n) * 1j * float(lad(k, x))
    return total


@pytest.mark.parametrize("C", [-2.0, -0.3, 0.8])
def test_realness_pole_kind(simple_borel, C):
    ra = build_approximant(list(simple_borel.coeffs[:9]), "pole", 8)
    lad = discontinuity_ladder(ra)
    table = median_table(4)
    for x in (4.0, 9.0, 16.0):
        pv = pv_laplace(ra, x)
        z = _complex_assembly(lad, table, C, x, pv)
        assert abs(z.imag) <= 1e-12
        assert abs(z.real - assemble_median(ra, lad, table, C, x, pv=pv)) <= 1e-12 * max(1, abs(z.real))


@pytest.mark.parametrize("C", [-2.0, 0.8])
def test_realified_branch_assembly(branch_borel, C):
    ra = build_approximant(list(branch_borel.coeffs[:7]), "sqrt-branch", 6)
    lad = discontinuity_ladder(ra)
    table = median_table(4)
    for x in (4.0, 9.0):
        pv = pv_laplace(ra, x)
        z = _complex_assembly(lad, table, C, x, pv)
        got = assemble_median(ra, lad, table, C, x, pv=pv)
        assert isinstance(got, float)
        assert abs((z.real + z.imag) - got) <= 1e-12 * max(1, abs(got))


def test_fit_zero_when_target_is_pv(simple_borel):
    ra = build_approximant(list(simple_borel.coeffs[:7]), "pole", 6)
    lad = discontinuity_ladder(ra)
    assert fit_transseries_constant(ra, lad, median_table(4), 10.0, pv_laplace(ra, 10.0)) == 0


@pytest.mark.parametrize("name, kind", [("ode-simple", "pole"), ("ode-branch", "sqrt-branch"),
                                        ("ode-cubic", "pole")])
def test_fit_round_trip(name, kind):
    from conftest import borel
    ra = build_approximant(list(borel(name, 12).coeffs[:9]), kind, 8)
    sol = resum(ra, 10.0, 0.12)
    assert abs(sol(10.0) - 0.12) < 1e-12


def test_components_add_up(simple_borel):
    ra = build_approximant(list(simple_borel.coeffs[:7]), "pole", 6)
    sol = resum(ra, 10.0, 0.12)
    comp = sol.components(np.array([5.0, 12.0]))
    parts = comp["pv_part"] + comp["exp_sector_1"] + comp["exp_sector_2"] + comp["exp_sector_3"]
    assert np.allclose(parts, comp["y_med"], rtol=0, atol=1e-15)


def _ode_residuals(name, N, xs, h=1e-3):
    from conftest import borel
    ode = builtin_ode(name)
    ra = build_approximant(list(borel(name, 20).coeffs[: N + 1]), "pole", N)
    sol = resum(ra, 10.0, 0.12)
    xs = np.asarray(xs)
    y = sol(np.concatenate([xs - h, xs, xs + h]))
    k = len(xs)
    dy = (y[2 * k:] - y[:k]) / (2 * h)
    return np.abs([dy[i] - ode.rhs(xs[i], y[k + i]) for i in range(k)])


def test_ode_residual_decreases_with_order_simple():
    xs = [5.0, 8.0, 12.0]
    r4, r8 = _ode_residuals("ode-simple", 4, xs), _ode_residuals("ode-simple", 8, xs)
    assert np.all(r8 < r4), f"N=4: {r4}, N=8: {r8}"


def test_ode_residual_decreases_with_order_cubic():
    xs = [8.0, 12.0]
    r4, r8 = _ode_residuals("ode-cubic", 4, xs), _ode_residuals("ode-cubic", 8, xs)
    assert np.all(r8 < r4)


def test_integrator_rejects_nonpositive_x():
    with pytest.raises(ValueError):
        PVIntegrator(EULER).integrate([0.0, 1.0])
