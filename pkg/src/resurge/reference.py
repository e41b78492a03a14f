"""Direct numerical integration of the ODE and curve comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .series import NormalFormODE


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_x: float):
        super().__init__(f"{message}; last reached x = {last_x:.6g}")
        self.last_x = last_x


@dataclass(frozen=True)
class ODESolution:
    """Accepted steps plus the integrator's own continuous extension per leg."""

    x: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    tol: float
    directions: tuple[str, ...]
    legs: tuple = field(default=(), repr=False)  # ((lo, hi, dense), ...)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, x):
        lo, hi = self.domain
        xa = np.asarray(x, dtype=float)
        if np.any(xa < lo - 1e-12) or np.any(xa > hi + 1e-12):
            raise ValueError(f"x outside the integrated range [{lo}, {hi}]")
        flat = np.clip(np.atleast_1d(xa), lo, hi)
        out = np.empty_like(flat)
        done = np.zeros(flat.shape, dtype=bool)
        for a, b, dense in self.legs:
            sel = ~done & (flat >= a) & (flat <= b)
            if np.any(sel):
                out[sel] = dense(flat[sel])[0]
                done |= sel
        # a single-point range has no legs
        out[~done] = self.y[0]
        # accepted steps are returned exactly
        idx = np.searchsorted(self.x, flat)
        hit = (idx < len(self.x)) & (self.x[np.minimum(idx, len(self.x) - 1)] == flat)
        out[hit] = self.y[idx[hit]]
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(xa.shape)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for a, b in zip(self.x, self.y):
                w.writerow([repr(float(a)), repr(float(b))])


def _leg(ode: NormalFormODE, x0, y0, x1, tol, blowup):
    def rhs(x, y):
        return [ode.rhs(x, y[0])]

    def escaped(x, y):
        return blowup - abs(y[0])
    escaped.terminal = True

    # local errors accumulate over the steps; run 100x tighter so the global error meets tol
    step_tol = max(tol / 100, 100 * np.finfo(float).eps)
    sol = solve_ivp(rhs, (x0, x1), [y0], method="RK45", rtol=step_tol, atol=step_tol, events=escaped,
                    dense_output=True)
    if sol.status == -1 or sol.status == 1:
        last = float(sol.t[-1])
        why = "solution escaped" if sol.status == 1 else sol.message
        raise IntegrationError(f"integration from {x0} toward {x1} failed ({why})", last)
    return sol.t, sol.y[0], sol.sol


def integrate_ode(ode: NormalFormODE, x0: float, y0: float, x_range: tuple[float, float],
                  tol: float = 1e-10, blowup: float = 1e8) -> ODESolution:
    """Adaptive Dormand-Prince 4(5) integration from (x0, y0) over ``x_range``.

    Integrates toward both ends of the range as needed and merges the
    accepted steps into one increasing grid.  Between steps the pair's own
    fourth-order continuous extension is used.
    """
    lo, hi = map(float, x_range)
    if not lo <= x0 <= hi:
        raise ValueError("x_range must contain x0")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lo <= 0:
        raise ValueError("the ODE is singular at x = 0; keep x_range positive")
    xs, ys, dirs, legs = [np.array([x0])], [np.array([float(y0)])], [], []
    if lo < x0:
        t, y, dense = _leg(ode, x0, y0, lo, tol, blowup)
        xs.insert(0, t[1:][::-1])
        ys.insert(0, y[1:][::-1])
        dirs.append("backward")
        legs.append((lo, x0, dense))
    if hi > x0:
        t, y, dense = _leg(ode, x0, y0, hi, tol, blowup)
        xs.append(t[1:])
        ys.append(y[1:])
        dirs.append("forward")
        legs.append((x0, hi, dense))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    dy = np.array([ode.rhs(a, b) for a, b in zip(x, y)])
    return ODESolution(x, y, dy, tol, tuple(dirs), tuple(legs))


@dataclass(frozen=True)
class ErrorReport:
    x: np.ndarray
    reference: np.ndarray
    candidate: np.ndarray
    max_abs: float
    max_rel: float
    x_max_abs: float
    x_max_rel: float

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.candidate - self.reference)

    @property
    def rel_err(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.abs_err / np.abs(self.reference)

    def summary(self) -> str:
        return (f"max abs error {self.max_abs:.4g} at x={self.x_max_abs:.4g}; "
                f"max rel error {self.max_rel:.4g} at x={self.x_max_rel:.4g}")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "reference", "candidate", "abs_err", "rel_err"])
            for row in zip(self.x, self.reference, self.candidate, self.abs_err, self.rel_err):
                w.writerow([repr(float(v)) for v in row])


def compare(reference: ODESolution, candidate: Callable, x_samples: Sequence[float]) -> ErrorReport:
    """Pointwise errors of ``candidate`` against the reference on shared samples."""
    lo, hi = reference.domain
    x = np.asarray([v for v in x_samples if lo <= v <= hi], dtype=float)
    if x.size == 0:
        raise ValueError("no samples inside the reference domain")
    ref = np.asarray(reference(x), dtype=float)
    cand = np.asarray(candidate(x), dtype=float)
    ab = np.abs(cand - ref)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(ref != 0, ab / np.abs(ref), np.where(ab == 0, 0.0, np.inf))
    ia, ir = int(np.argmax(ab)), int(np.argmax(rel))
    return ErrorReport(x, ref, cand, float(ab[ia]), float(rel[ir]), float(x[ia]), float(x[ir]))
