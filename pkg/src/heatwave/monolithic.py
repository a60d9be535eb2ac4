"""Strongly coupled reference solver for the heat-wave system.

Each time step is a partitioned fixed-point iteration on the interface
velocity c^{n+1}, relaxed with an Aitken-accelerated factor that starts at
``omega``.  The wave interior is advanced once per step (it does not depend
on the interface value at the new level); the subiteration only touches the
boundary node, the extracted flux and the heat solve.

Plain coupling (Neumann-Dirichlet): the velocity iterate sets the
displacement h^{n+1} = h^n + dt/2 (c^n + c), the wave flux at x = 0 is
handed to the heat solve as Neumann datum, and u(t_{n+1}, 0) is the next
velocity.

Point-mass coupling (Dirichlet-Neumann): the heat solve receives the
velocity (u(t_{n+1}, 0) = c), returns its flux g, and Newton's law
h'' = d_x v - d_x u advanced with the trapezoid rule gives the next velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Field, RunConfig, SpaceGrid, TraceSeries, WAVE
from .heat import HeatOperator
from .wave import first_step, leapfrog_step, one_sided_flux


class CouplingError(RuntimeError):
    """Subiterations did not reach the coupling tolerance."""

    def __init__(self, step: int, residual: float, history: list):
        super().__init__(
            f"coupling did not converge at step {step}: residual {residual:.3e} "
            f"after {len(history)} subiterations"
        )
        self.step = step
        self.residual = residual
        self.history = history


@dataclass(frozen=True, eq=False)
class CoupledSolution:
    problem: str
    u: Field
    v: Field
    h: TraceSeries
    c: TraceSeries
    g: TraceSeries
    wave_flux: TraceSeries
    iterations: np.ndarray
    coupling_residuals: np.ndarray

    def newton_residual(self) -> np.ndarray:
        """|h'' - (d_x v - d_x u)| at interior levels (centered second difference)."""
        dt = self.h.grid.dt
        hv = np.asarray(self.h.values)
        acc = (hv[2:] - 2 * hv[1:-1] + hv[:-2]) / dt**2
        force = np.asarray(self.wave_flux.values) - np.asarray(self.g.values)
        return np.abs(acc - force[1:-1])


def _subiterate(update, guess, omega, tol, max_iters, aitken, step):
    c = guess
    history = []
    w = omega
    r_prev = None
    for _ in range(max_iters):
        c_new = update(c)
        r = c_new - c
        history.append(abs(r))
        if abs(r) <= tol:
            return c, history
        if aitken and r_prev is not None and r != r_prev:
            w = -w * r_prev / (r - r_prev)
        c = c + w * r
        r_prev = r
    raise CouplingError(step, history[-1], history)


def _solve_coupled(problem, u0, v0, v1, t_end, scheme, omega, tol_c, max_iters, aitken, first):
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    n_cells = len(v0) - 1
    if len(u0) != n_cells + 1:
        raise ValueError("u0 and v0 must share n_cells")
    if abs(v0[0]) > 1e-12 or abs(u0[0]) > 1e-12:
        raise ValueError("need v0(0) = 0 and u0(-1) = 0")
    op = HeatOperator(n_cells, t_end, scheme)
    tgrid = op.tgrid
    dt, dx = tgrid.dt, op.sgrid.dx
    n_steps = tgrid.n_steps

    u = np.zeros((n_steps + 1, n_cells + 1))
    v = np.zeros((n_steps + 1, n_cells + 1))
    h = np.zeros(n_steps + 1)
    c = np.zeros(n_steps + 1)
    g = np.zeros(n_steps + 1)
    q = np.zeros(n_steps + 1)
    iters = np.zeros(n_steps + 1, dtype=int)
    resid = np.zeros(n_steps + 1)

    u[0] = u0
    v[0] = v0
    v[0, -1] = 0.0
    q[0] = one_sided_flux(v[0], dx)
    if problem == "plain":
        c[0] = u0[-1]
        g[0] = q[0]
    else:
        if abs(u0[-1]) > 1e-12:
            raise ValueError("point-mass coupling needs u0(0) = 0 (h'(0) = 0)")
        g[0] = (3.0 * u0[-1] - 4.0 * u0[-2] + u0[-3]) / (2.0 * dx)
    gain = op.gain
    gain_n = gain[-1]
    flux_slope = -3.0 / (2.0 * dx)

    for n in range(n_steps):
        if n == 0:
            v_next = first_step(v[0], v1, dt, first)
        else:
            v_next = leapfrog_step(v[n - 1], v[n], 0.0)
        # flux with v_next[0] = 0; the boundary value enters linearly
        q_base = one_sided_flux(v_next, dx)
        free = op.free_step(u[n, 1:], g[n])

        if problem == "plain":
            def update(cc):
                h_next = h[n] + 0.5 * dt * (c[n] + cc)
                flux = q_base + flux_slope * h_next
                return free[-1] + flux * gain_n
        else:
            accel_old = q[n] - g[n]

            def update(cc):
                h_next = h[n] + 0.5 * dt * (c[n] + cc)
                flux = q_base + flux_slope * h_next
                g_new = (cc - free[-1]) / gain_n
                return c[n] + 0.5 * dt * (accel_old + flux - g_new)

        guess = c[n] if n == 0 else 2.0 * c[n] - c[n - 1]
        if not np.any(u0) and not np.any(v0) and not np.any(v1):
            guess = 0.0
        c_acc, history = _subiterate(update, guess, omega, tol_c, max_iters, aitken, n + 1)

        c[n + 1] = c_acc
        h[n + 1] = h[n] + 0.5 * dt * (c[n] + c_acc)
        v_next[0] = h[n + 1]
        q[n + 1] = q_base + flux_slope * h[n + 1]
        g_new = q[n + 1] if problem == "plain" else (c_acc - free[-1]) / gain_n
        g[n + 1] = g_new
        u[n + 1, 1:] = free + g_new * gain
        v[n + 1] = v_next
        iters[n + 1] = len(history)
        resid[n + 1] = history[-1]

    wgrid = SpaceGrid(WAVE, n_cells)
    return CoupledSolution(
        problem=problem,
        u=Field(op.sgrid, tgrid, u),
        v=Field(wgrid, tgrid, v),
        h=TraceSeries(tgrid, h),
        c=TraceSeries(tgrid, c),
        g=TraceSeries(tgrid, g),
        wave_flux=TraceSeries(tgrid, q),
        iterations=iters,
        coupling_residuals=resid,
    )


def solve_coupled_plain(u0, v0, v1, t_end: float = 1.0, scheme: str = "crank_nicolson",
                        omega: float = 0.5, tol_c: float = 1e-10, max_iters: int = 50,
                        aitken: bool = True, first: str = "midpoint") -> CoupledSolution:
    """Problem without point mass: u(.,0) = d_t v(.,0) and d_x u(.,0) = d_x v(.,0)."""
    return _solve_coupled("plain", u0, v0, v1, t_end, scheme, omega, tol_c, max_iters, aitken, first)


def solve_coupled_mass(u0, v0, v1, t_end: float = 1.0, scheme: str = "crank_nicolson",
                       omega: float = 0.5, tol_c: float = 1e-10, max_iters: int = 50,
                       aitken: bool = True, first: str = "midpoint") -> CoupledSolution:
    """Problem with a point mass: u(.,0) = h' = d_t v(.,0) and h'' = d_x v(.,0) - d_x u(.,0)."""
    return _solve_coupled("point_mass", u0, v0, v1, t_end, scheme, omega, tol_c, max_iters, aitken, first)


def solve_from_config(config: RunConfig, u0, v0, v1) -> CoupledSolution:
    solver = solve_coupled_plain if config.problem == "plain" else solve_coupled_mass
    return solver(u0, v0, v1, t_end=config.t_end, scheme=config.scheme, omega=config.omega,
                  tol_c=config.tol_c, max_iters=config.max_iters)
