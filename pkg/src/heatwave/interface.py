"""Nonlocal interface equations for the interface flux g = d_x u(., 0).

Plain coupling:       (I + L_{u0}) g = f,             f = v0' + v1
Point-mass coupling:  (I + L_{u0}) g + (L_{u0} g)' = f,  (L_{u0} g)(0) = 0

Both are causal, so they are solved by marching: the discrete NtD map is
lower triangular with positive diagonal ``op.lam`` and each step reduces to
one scalar equation for g_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .core import TimeGrid, TraceSeries, cumulative_trapezoid
from .heat import HeatOperator, ntd_apply, ntd_free, ntd_matrix
from .sobolev import SpectralData


@dataclass(frozen=True, eq=False)
class InterfaceSolution:
    g: TraceSeries
    c: TraceSeries
    h: TraceSeries
    f: TraceSeries
    residual: float
    relation_residuals: dict = field(default_factory=dict)


def rhs_f(v0, v1, tgrid: TimeGrid) -> TraceSeries:
    """f(t) = v0'(t) + v1(t) on the time grid.

    Spectral data are differentiated term by term; nodal arrays (sampled on
    the wave grid, which coincides with the time grid) by second-order
    differences.
    """
    t = tgrid.t
    if isinstance(v0, SpectralData):
        dv0 = v0.evaluate(t, derivative=1)
    else:
        v0 = np.asarray(v0, dtype=float)
        if v0.shape != t.shape:
            raise ValueError("nodal v0 must live on the time grid (dt = dx)")
        dv0 = np.gradient(v0, tgrid.dt, edge_order=2)
    if isinstance(v1, SpectralData):
        v1v = v1.evaluate(t)
    else:
        v1v = np.asarray(v1, dtype=float)
        if v1v.shape != t.shape:
            raise ValueError("nodal v1 must live on the time grid (dt = dx)")
    return TraceSeries(tgrid, dv0 + v1v)


def exp_integral(values: np.ndarray, dt: float) -> np.ndarray:
    """G(t_n) = int_0^{t_n} e^{s - t_n} y(s) ds by trapezoid with the exact factor e^{-dt}."""
    y = np.asarray(values, dtype=float)
    decay = math.exp(-dt)
    out = np.zeros_like(y)
    for n in range(1, len(y)):
        out[n] = decay * out[n - 1] + 0.5 * dt * (y[n] + decay * y[n - 1])
    return out


def _prepare(op: HeatOperator, u0, f: TraceSeries):
    if f.grid != op.tgrid:
        raise ValueError("f must live on the operator's time grid")
    free = ntd_free(op, u0).values
    return np.asarray(f.values), free, op.kernel(), op.kernel_initial()


def _history(kern, kern0, g, n):
    """Contribution of g_0..g_{n-1} to (L_0 g)(t_n)."""
    hist = g[0] * kern0[n]
    if n > 1:
        hist += kern[n - 1:0:-1] @ g[1:n]
    return hist


def solve_plain(op: HeatOperator, u0, f: TraceSeries) -> InterfaceSolution:
    """March g_n = (f_n - (L_{u0}0)_n - history_n) / (1 + lam)."""
    fv, free, kern, kern0 = _prepare(op, u0, f)
    n_steps = op.n_steps
    g = np.zeros(n_steps + 1)
    g[0] = fv[0] - free[0]
    for n in range(1, n_steps + 1):
        g[n] = (fv[n] - free[n] - _history(kern, kern0, g, n)) / (1.0 + op.lam)
    c = ntd_apply(op, u0, g).values
    grid = op.tgrid
    residual = float(np.max(np.abs(g + c - fv)))
    return InterfaceSolution(
        g=TraceSeries(grid, g),
        c=TraceSeries(grid, c),
        h=TraceSeries(grid, cumulative_trapezoid(c, grid.dt)),
        f=f,
        residual=residual,
        relation_residuals={"plain": residual},
    )


def pointmass_defect(g: np.ndarray, c: np.ndarray, f: np.ndarray, dt: float) -> np.ndarray:
    """Nodewise g + c + c' - f with c' from centered differences (one-sided at the ends)."""
    dc = np.gradient(c, dt, edge_order=2)
    return g + c + dc - f


def solve_pointmass(op: HeatOperator, u0, f: TraceSeries) -> InterfaceSolution:
    """March the point-mass equation through the exponential-kernel form of c = L_{u0} g.

    Per step, c_n = lam g_n + H_n (NtD) and
    c_n = e^{-dt} c_{n-1} + dt/2 (f_n - g_n) + dt/2 e^{-dt} (f_{n-1} - g_{n-1}),
    which fixes g_n.  g_0 = 0 (H^s_00 data with u0'(0) = 0).
    """
    fv, free, kern, kern0 = _prepare(op, u0, f)
    if abs(free[0]) > 1e-12:
        raise ValueError("point-mass coupling needs u0(0) = 0")
    dt = op.tgrid.dt
    decay = math.exp(-dt)
    denom = op.lam + 0.5 * dt
    assert abs(denom) > 1e-14
    n_steps = op.n_steps
    g = np.zeros(n_steps + 1)
    c_rec = np.zeros(n_steps + 1)
    for n in range(1, n_steps + 1):
        known = decay * c_rec[n - 1] + 0.5 * dt * fv[n] + 0.5 * dt * decay * (fv[n - 1] - g[n - 1])
        hist = free[n] + _history(kern, kern0, g, n)
        g[n] = (known - hist) / denom
        c_rec[n] = op.lam * g[n] + hist
    c = ntd_apply(op, u0, g).values
    grid = op.tgrid
    kernel_form = c - exp_integral(fv - g, dt)
    defect = pointmass_defect(g, c, fv, dt)
    return InterfaceSolution(
        g=TraceSeries(grid, g),
        c=TraceSeries(grid, c),
        h=TraceSeries(grid, cumulative_trapezoid(c, grid.dt)),
        f=f,
        residual=float(np.max(np.abs(defect))),
        relation_residuals={
            "ntd": float(np.max(np.abs(c - c_rec))),
            "kernel": float(np.max(np.abs(kernel_form))),
            "defect": float(np.max(np.abs(defect))),
        },
    )


def apply_W(op: HeatOperator, g: TraceSeries) -> TraceSeries:
    """(W g)(t) = L_0^{-1}( int_0^t e^{s-t} g(s) ds ) via a triangular solve."""
    gv = np.asarray(g.values)
    if abs(gv[0]) > 1e-10:
        raise ValueError("apply_W expects g(0) = 0")
    mat = ntd_matrix(op)
    diag = np.diag(mat)
    assert np.all(diag > 0)
    integ = exp_integral(gv, op.tgrid.dt)
    out = np.zeros_like(gv)
    out[1:] = solve_triangular(mat, integ[1:], lower=True)
    return TraceSeries(g.grid, out)


def kernel_identity_check(g: TraceSeries) -> float:
    """max |g - (G' + G)| for G(t) = int_0^t e^{s-t} g(s) ds."""
    dt = g.grid.dt
    big_g = exp_integral(g.values, dt)
    dg = np.gradient(big_g, dt, edge_order=2)
    return float(np.max(np.abs(np.asarray(g.values) - dg - big_g)))
