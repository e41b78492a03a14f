from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from resurge.approximant import (ResurgentApproximant, SingularPointError, build_approximant, evaluate,
                                 predicted_ratios, realified, select_pole_count)


def mul(a, b, n):
    out = [F(0)] * n
    for i, x in enumerate(a[:n]):
        for j, y in enumerate(b[: n - i]):
            out[i + j] += x * y
    return out


def inverse_lattice_series(Np, n, lam=1):
    """Taylor series of prod 1/(1 - z/(k lam)) as a product of geometric series."""
    out = [F(1)] + [F(0)] * (n - 1)
    for k in range(1, Np + 1):
        out = mul(out, [F(1, (k * lam) ** j) for j in range(n)], n)
    return out


def test_euler_exact():
    ra = build_approximant([1, 1], "pole", 1)
    assert ra.c == (1, 0)
    assert ra.taylor(30) == [1] * 30


def test_zero_series():
    ra = build_approximant([0] * 6, "sqrt-branch", 4)
    assert all(v == 0 for v in ra.c)


def test_simple_matching_independent(simple_borel):
    B = list(simple_borel.coeffs[:9])
    ra = build_approximant(B, "pole", 8)
    assert ra.N == 8
    assert mul(list(ra.c), inverse_lattice_series(8, 9), 9) == B


@given(st.lists(st.fractions(-30, 30, max_denominator=10), min_size=1, max_size=8),
       st.integers(1, 12), st.sampled_from(["pole", "sqrt-branch"]))
@settings(max_examples=50, deadline=None)
def test_matching_invariant(B, Np, kind):
    ra = build_approximant(B, kind, Np)
    assert ra.taylor(len(B)) == B
    assert ra.N == len(B) - 1


@given(st.lists(st.fractions(-5, 5, max_denominator=7), min_size=3, max_size=6))
@settings(max_examples=20, deadline=None)
def test_matched_count_independent_of_nprime(B):
    for Np in (1, 3, 9):
        ra = build_approximant(B, "pole", Np)
        assert len(ra.c) == len(B)
        assert ra.taylor(len(B)) == B


def test_recovers_same_structure():
    # (1 + z/2) / ((1 - z)(1 - z/2))
    truth = mul([F(1), F(1, 2)], inverse_lattice_series(2, 40), 40)
    ra = build_approximant(truth[:2], "pole", 2)
    assert ra.taylor(40) == truth
    ra3 = build_approximant(truth[:3], "pole", 3)
    assert ra3.taylor(40) == truth
    assert list(ra3.c) == mul([F(1), F(1, 2)], [F(1), F(-1, 3)], 3)


def test_partial_fraction_lattice_recovered():
    # 1/((1 - z)(2 - z)) = 1/(1 - z) - 1/(2 - z)
    B = [1 - F(1, 2 ** (n + 1)) for n in range(6)]
    assert select_pole_count(B, "pole", search=range(1, 11)) == 2


def test_euler_ratios_exact():
    ra = build_approximant([1] * 6, "pole", 3)
    rep = predicted_ratios(ra, [1] * 15)
    assert rep.ratios == [1.0] * 9
    assert all(e.ratio == 1 for e in rep.entries)


def test_euler_selection_tie_break():
    assert select_pole_count([1] * 6, "pole") == 4
    assert select_pole_count([1] * 6, "pole", search=[7, 3, 9]) == 3


def test_ratio_improvement_simple(simple_borel):
    B = list(simple_borel.coeffs)
    N = 9
    few = predicted_ratios(build_approximant(B[: N + 1], "pole", N), B[: N + 5]).first
    many = predicted_ratios(build_approximant(B[: N + 1], "pole", 8 * N), B[: N + 5]).first
    assert abs(many.ratio - 1) < abs(few.ratio - 1)
    # a later ratio drifts away from 1 with N' = N
    drift = predicted_ratios(build_approximant(B[: N + 1], "pole", N), B[: N + 12]).entries
    assert abs(drift[-1].ratio - 1) > abs(drift[0].ratio - 1)


def test_auto_selection_beats_n(simple_borel):
    B = list(simple_borel.coeffs)
    N = 9
    Np = select_pole_count(B[: N + 2], "pole")
    assert Np > N
    dev = lambda k: abs(predicted_ratios(build_approximant(B[: N + 1], "pole", k), B[: N + 2]).first.ratio - 1)
    assert dev(Np) < dev(N)


def test_evaluate_examples():
    assert evaluate(build_approximant([1, 1], "pole", 1), 0) == 1
    ra = build_approximant([1], "sqrt-branch", 1)
    assert abs(evaluate(ra, F(3, 4)) - 2) < mpmath.mpf(10) ** -60


def test_lattice_point_raises():
    with pytest.raises(SingularPointError):
        evaluate(build_approximant([1, 1], "pole", 2), 2)


def test_branch_convention_above_axis():
    ra = build_approximant([1], "sqrt-branch", 1)
    # 1/sqrt(1 - (2 + i0)) = 1/(-i) = i
    v = evaluate(ra, 2)
    assert abs(v - 1j) < 1e-50
    assert abs(realified(ra, 2) - 1) < 1e-50


def test_branch_realified_real_and_consistent(branch_borel):
    ra = build_approximant(list(branch_borel.coeffs[:7]), "sqrt-branch", 6)
    for z in (0.1, 0.5, 0.9):
        assert realified(ra, z) == evaluate(ra, z)
    for z in (1.5, 2.25, 3.7, 5.5):
        v = realified(ra, z)
        assert isinstance(v, mpmath.mpf)
        # the realified value is Re + Im of the +i0 value
        w = evaluate(ra, z)
        assert abs(v - (w.real + w.imag)) < 1e-50


def test_local_coefficients():
    ra = build_approximant([1, 1], "pole", 1)
    assert ra.local_coefficient(1) == 1
    # 1/sqrt(1 - z): local coefficient 1 at z = 1
    rb = build_approximant([1], "sqrt-branch", 1)
    assert abs(rb.local_coefficient(1) - 1) < 1e-50


def test_pole_local_coefficient_is_minus_residue(simple_borel):
    ra = build_approximant(list(simple_borel.coeffs[:5]), "pole", 4)
    for m in (1, 2, 3):
        with mpmath.workdps(80):
            eps = mpmath.mpf(10) ** -30
            num = -eps * evaluate(ra, m + eps, dps=80)
            assert abs(num - ra.local_coefficient(m)) < 1e-20


def test_json_round_trip(simple_borel):
    ra = build_approximant(list(simple_borel.coeffs[:6]), "pole", 11)
    back = ResurgentApproximant.from_json(ra.to_json())
    assert back == ra


def test_bad_kind():
    with pytest.raises(ValueError):
        build_approximant([1, 1], "cube-root", 1)
