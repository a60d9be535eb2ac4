"""Wave equation on (0, 1): d'Alembert formulas and the characteristic leapfrog.

With dt = dx the leapfrog update v^{n+1}_j = v^n_{j+1} + v^n_{j-1} - v^{n-1}_j
is exact for every solution of the wave equation, so the only errors of a
wave solve come from the first step and from whatever is fed in at x = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Field, SpaceGrid, TimeGrid, TraceSeries, WAVE

REGION_I = "region_I"
REGION_II = "region_II"
OUTSIDE = "outside"

_EPS = 1e-12


@dataclass(frozen=True)
class CharacteristicRegion:
    in_I: bool
    in_II: bool

    @property
    def tag(self) -> str:
        if self.in_I and not self.in_II:
            return REGION_I
        if self.in_II and not self.in_I:
            return REGION_II
        if self.in_I and self.in_II:
            return f"{REGION_I}+{REGION_II}"
        return OUTSIDE


def classify(t: float, x: float) -> CharacteristicRegion:
    """Region I is reached only from the interface, region II only from the initial data.

    Points on a separating characteristic belong to both.
    """
    if not (0.0 <= t <= 1.0 and 0.0 <= x <= 1.0):
        raise ValueError(f"({t}, {x}) outside [0, 1] x [0, 1]")
    in_i = abs(2 * t - 1) <= 1 - 2 * x + _EPS
    in_ii = abs(2 * x - 1) <= 1 - 2 * t + _EPS
    return CharacteristicRegion(bool(in_i), bool(in_ii))


def classify_nodes(n: int, j: int, n_cells: int) -> CharacteristicRegion:
    """Integer version of :func:`classify` for grid node (t_n, x_j) with dt = dx."""
    if not (0 <= n <= n_cells and 0 <= j <= n_cells):
        raise ValueError("node outside the unit square")
    return CharacteristicRegion(
        abs(2 * n - n_cells) <= n_cells - 2 * j,
        abs(2 * j - n_cells) <= n_cells - 2 * n,
    )


def _interp(values: np.ndarray, h: float, y: float) -> float:
    pos = y / h
    i = int(np.floor(pos + 1e-12))
    i = min(max(i, 0), len(values) - 2)
    w = pos - i
    if abs(w) < 1e-12:
        return float(values[i])
    return float((1 - w) * values[i] + w * values[i + 1])


def _integral(values: np.ndarray, h: float, a: float, b: float) -> float:
    """Integral over [a, b] of the piecewise-linear interpolant of nodal values."""
    if b < a:
        return -_integral(values, h, b, a)
    ia = int(np.ceil(a / h - 1e-9))
    ib = int(np.floor(b / h + 1e-9))
    total = 0.0
    if ib > ia:
        seg = values[ia:ib + 1]
        total += h * (np.sum(seg) - 0.5 * (seg[0] + seg[-1]))
    if ib >= ia:
        total += 0.5 * (ia * h - a) * (_interp(values, h, a) + values[ia])
        total += 0.5 * (b - ib * h) * (values[ib] + _interp(values, h, b))
    else:
        total = 0.5 * (b - a) * (_interp(values, h, a) + _interp(values, h, b))
    return float(total)


def dalembert_initial(v0, v1, t: float, x: float) -> float:
    """v(t,x) = (v0(x-t) + v0(x+t))/2 + (1/2) int_{x-t}^{x+t} v1 on region II."""
    if not classify(t, x).in_II:
        raise ValueError(f"({t}, {x}) is not in region II")
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    dx = 1.0 / (len(v0) - 1)
    return 0.5 * (_interp(v0, dx, x - t) + _interp(v0, dx, x + t)) + 0.5 * _integral(
        v1, dx, x - t, x + t
    )


def dalembert_boundary(h: TraceSeries, flux: TraceSeries, t: float, x: float) -> float:
    """v(t,x) = (h(t-x) + h(t+x))/2 + (1/2) int_{t-x}^{t+x} d_x v(s,0) ds on region I."""
    if not classify(t, x).in_I:
        raise ValueError(f"({t}, {x}) is not in region I")
    dt = h.grid.dt
    hv, fv = np.asarray(h.values), np.asarray(flux.values)
    return 0.5 * (_interp(hv, dt, t - x) + _interp(hv, dt, t + x)) + 0.5 * _integral(
        fv, dt, t - x, t + x
    )


def first_step(v0: np.ndarray, v1: np.ndarray, dt: float, mode: str = "midpoint") -> np.ndarray:
    """Interior values at t = dt from the d'Alembert formula.

    ``midpoint`` samples v1 at the node (second order); ``exact_linear``
    integrates the piecewise-linear interpolant of v1 exactly.
    """
    out = np.zeros_like(v0)
    out[1:-1] = 0.5 * (v0[2:] + v0[:-2])
    if mode == "midpoint":
        out[1:-1] += dt * v1[1:-1]
    elif mode == "exact_linear":
        out[1:-1] += 0.25 * dt * (v1[:-2] + 2.0 * v1[1:-1] + v1[2:])
    else:
        raise ValueError(f"unknown first-step mode {mode!r}")
    return out


def leapfrog_step(v_prev: np.ndarray, v_curr: np.ndarray, h_next: float) -> np.ndarray:
    out = np.empty_like(v_curr)
    out[1:-1] = v_curr[2:] + v_curr[:-2] - v_prev[1:-1]
    out[0] = h_next
    out[-1] = 0.0
    return out


def one_sided_flux(row: np.ndarray, dx: float) -> float:
    return (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * dx)


def _check_characteristic(sgrid: SpaceGrid, tgrid: TimeGrid):
    if abs(tgrid.dt - sgrid.dx) > 1e-14:
        raise ValueError(f"characteristic scheme needs dt == dx, got dt={tgrid.dt}, dx={sgrid.dx}")


def solve_wave_ibvp(v0, v1, h: TraceSeries, first: str = "midpoint") -> Field:
    """Wave field with v(t,0) = h(t), v(t,1) = 0 and initial data (v0, v1)."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    sgrid = SpaceGrid(WAVE, len(v0) - 1)
    tgrid = h.grid
    _check_characteristic(sgrid, tgrid)
    if abs(h.values[0] - v0[0]) > 1e-12:
        raise ValueError("incompatible data: h(0) must equal v0(0)")
    out = np.zeros((tgrid.n_steps + 1, sgrid.n_cells + 1))
    out[0] = v0
    out[0, -1] = 0.0
    out[1] = first_step(v0, v1, tgrid.dt, first)
    out[1, 0] = h.values[1]
    for n in range(1, tgrid.n_steps):
        out[n + 1] = leapfrog_step(out[n - 1], out[n], h.values[n + 1])
    return Field(sgrid, tgrid, out)


def wave_flux_trace(field: Field) -> TraceSeries:
    """d_x v(., 0) by the second-order one-sided difference."""
    v = np.asarray(field.values)
    dx = field.sgrid.dx
    return TraceSeries(field.tgrid, (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2.0 * dx))


def wave_energy(field: Field) -> np.ndarray:
    """0.5 * int (v_t^2 + v_x^2) dx per time level.

    v_t by central differences in time (one-sided at the first and last
    level), v_x by central differences in space (one-sided at the ends),
    trapezoid quadrature.
    """
    v = np.asarray(field.values)
    dt, dx = field.tgrid.dt, field.sgrid.dx
    vt = np.gradient(v, dt, axis=0, edge_order=2)
    vx = np.gradient(v, dx, axis=1, edge_order=2)
    w = np.full(v.shape[1], dx)
    w[0] = w[-1] = 0.5 * dx
    return 0.5 * (vt**2 + vx**2) @ w


def staggered_energy(field: Field) -> np.ndarray:
    """Leapfrog energy at half levels n+1/2, exactly conserved when both ends are fixed at 0."""
    v = np.asarray(field.values)
    dt, dx = field.tgrid.dt, field.sgrid.dx
    vel = (v[1:] - v[:-1]) / dt
    kinetic = 0.5 * dx * np.sum(vel[:, 1:-1] ** 2, axis=1)
    grad_new = np.diff(v[1:], axis=1) / dx
    grad_old = np.diff(v[:-1], axis=1) / dx
    potential = 0.5 * dx * np.sum(grad_new * grad_old, axis=1)
    return kinetic + potential
