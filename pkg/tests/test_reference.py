import math

import numpy as np
import pytest
from scipy.special import expi

from resurge.reference import IntegrationError, compare, integrate_ode
from resurge.series import NormalFormODE, builtin_ode

GRID = np.linspace(5, 20, 301)


def euler_exact(x):
    return np.exp(-x) * expi(x)


@pytest.mark.parametrize("tol", [1e-8, 1e-10])
def test_euler_closed_form(tol):
    sol = integrate_ode(builtin_ode("euler"), 10.0, float(euler_exact(10.0)), (5, 20), tol=tol)
    assert np.max(np.abs(sol(GRID) - euler_exact(GRID))) < tol
    assert sol.directions == ("backward", "forward")


def test_zero_solution_stays_zero():
    ode = NormalFormODE(lam=1, nonlinear=((2, 0, 1),))
    sol = integrate_ode(ode, 10.0, 0.0, (5, 20))
    assert np.all(sol(GRID) == 0)


def test_grid_increasing():
    sol = integrate_ode(builtin_ode("ode-simple"), 10.0, 0.12, (5, 20))
    assert np.all(np.diff(sol.x) > 0)
    assert sol.domain == (5.0, 20.0)
    assert sol(10.0) == 0.12


@pytest.mark.parametrize("name", ["ode-simple", "ode-branch", "euler"])
def test_self_convergence(name):
    tol = 1e-9
    a = integrate_ode(builtin_ode(name), 10.0, 0.12, (5, 20), tol=tol)
    b = integrate_ode(builtin_ode(name), 10.0, 0.12, (5, 20), tol=tol / 2)
    assert np.max(np.abs(a(GRID) - b(GRID))) < tol
    assert np.max(np.abs(a(a.x) - b(a.x))) < tol


@pytest.mark.parametrize("name", ["ode-simple", "ode-cubic", "euler"])
@pytest.mark.parametrize("x1", [11.0, 12.0, 20.0])
def test_forward_backward_round_trip(name, x1):
    tol = 1e-10
    ode = builtin_ode(name)
    fwd = integrate_ode(ode, 10.0, 0.12, (10, x1), tol=tol)
    back = integrate_ode(ode, x1, fwd(x1), (10, x1), tol=tol)
    assert abs(back(10.0) - 0.12) < 10 * tol


def test_blow_up_reports_last_x():
    with pytest.raises(IntegrationError) as info:
        integrate_ode(builtin_ode("ode-simple"), 10.0, 0.12, (3, 20))
    assert 4.2 < info.value.last_x < 4.4


def test_bad_ranges():
    ode = builtin_ode("euler")
    with pytest.raises(ValueError):
        integrate_ode(ode, 10.0, 0.1, (11, 20))
    with pytest.raises(ValueError):
        integrate_ode(ode, 1.0, 0.1, (0, 2))
    sol = integrate_ode(ode, 10.0, 0.1, (5, 20))
    with pytest.raises(ValueError):
        sol(25.0)


def test_compare_identical():
    sol = integrate_ode(builtin_ode("euler"), 10.0, 0.1, (5, 20))
    rep = compare(sol, sol, GRID)
    assert rep.max_abs == 0 and rep.max_rel == 0


def test_compare_known_offset(tmp_path):
    sol = integrate_ode(builtin_ode("euler"), 10.0, float(euler_exact(10.0)), (5, 20))
    rep = compare(sol, lambda x: sol(x) + 1e-3, GRID)
    assert rep.max_abs == pytest.approx(1e-3, rel=1e-9)
    assert rep.x_max_rel == pytest.approx(20.0)  # smallest |y| at the right end
    rep.write_csv(tmp_path / "cmp.csv")
    assert (tmp_path / "cmp.csv").read_text().startswith("x,reference,candidate,abs_err,rel_err")
    assert "max abs error" in rep.summary()


def test_compare_empty_overlap():
    sol = integrate_ode(builtin_ode("euler"), 10.0, 0.1, (5, 20))
    with pytest.raises(ValueError):
        compare(sol, sol, [1.0, 2.0, 30.0])
