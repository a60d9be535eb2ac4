"""Heat equation on (-1, 0) with Neumann data at x = 0 and its Neumann-to-Dirichlet map.

Grid nodes are x_i = -1 + i dx.  Node 0 carries the homogeneous Dirichlet
condition; the flux condition at node N is imposed through a ghost node,
(u_{N+1} - u_{N-1}) / (2 dx) = g, eliminated into the last row.  Both schemes
are theta-methods sharing one factorization per operator.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import Field, TraceSeries, make_grids

MAX_DENSE_STEPS = 4096

_THETA = {"crank_nicolson": 0.5, "implicit_euler": 1.0}


class HeatOperator:
    """Time stepper for the heat problem plus the cached data of its NtD map.

    ``lam`` is the value u(t_1, 0) produced from a zero state by a unit flux
    switched on at t_1 alone; it is the constant diagonal of the discrete
    L_0 and is strictly positive.
    """

    def __init__(self, n_cells: int, t_end: float = 1.0, scheme: str = "crank_nicolson"):
        if scheme not in _THETA:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.sgrid, _, self.tgrid = make_grids(n_cells, t_end)
        self.scheme = scheme
        theta = _THETA[scheme]
        n, dx, dt = n_cells, self.sgrid.dx, self.tgrid.dt

        main = np.full(n, -2.0 / dx**2)
        lower = np.full(n - 1, 1.0 / dx**2)
        upper = np.full(n - 1, 1.0 / dx**2)
        lower[-1] = 2.0 / dx**2  # ghost-node elimination in the flux row
        lap = sp.diags([lower, main, upper], [-1, 0, 1], format="csc")
        eye = sp.identity(n, format="csc")
        lhs = eye - theta * dt * lap
        self._lu = splu(lhs.tocsc())
        assert np.all(np.isfinite(self._lu.U.diagonal())) and np.all(self._lu.U.diagonal() != 0)
        self._explicit = (eye + (1.0 - theta) * dt * lap).tocsr()
        flux_col = np.zeros(n)
        flux_col[-1] = 2.0 / dx
        self._flux_old = (1.0 - theta) * dt * flux_col
        self._gain = self._lu.solve(theta * dt * flux_col)
        self.lam = float(self._gain[-1])
        assert self.lam > 0
        self._kernel = None
        self._kernel0 = None

    @property
    def n_cells(self) -> int:
        return self.sgrid.n_cells

    @property
    def n_steps(self) -> int:
        return self.tgrid.n_steps

    def step(self, u: np.ndarray, g_old: float, g_new: float) -> np.ndarray:
        """Advance the unknowns u_1..u_N by one step."""
        rhs = self._explicit @ u
        if g_old:
            rhs = rhs + g_old * self._flux_old
        return self._lu.solve(rhs) + g_new * self._gain

    def free_step(self, u: np.ndarray, g_old: float) -> np.ndarray:
        """Step with zero flux at the new level; add ``g_new * gain`` to complete it."""
        rhs = self._explicit @ u
        if g_old:
            rhs = rhs + g_old * self._flux_old
        return self._lu.solve(rhs)

    @property
    def gain(self) -> np.ndarray:
        return self._gain

    def march(self, u0: np.ndarray, g: np.ndarray) -> np.ndarray:
        n_steps = self.n_steps
        out = np.zeros((n_steps + 1, self.n_cells + 1))
        u = np.asarray(u0, dtype=float)[1:].copy()
        out[0, 1:] = u
        for m in range(n_steps):
            u = self.step(u, g[m], g[m + 1])
            out[m + 1, 1:] = u
        return out

    def kernel(self) -> np.ndarray:
        """Response u(t_{j+m}, 0) to a unit flux impulse at step j >= 1, m = 0..n-1."""
        if self._kernel is None:
            g = np.zeros(self.n_steps + 1)
            g[1] = 1.0
            trace = self.march(np.zeros(self.n_cells + 1), g)[:, -1]
            self._kernel = trace[1:].copy()
        return self._kernel

    def kernel_initial(self) -> np.ndarray:
        """Response to a unit flux at step 0 only (non-zero for Crank-Nicolson)."""
        if self._kernel0 is None:
            g = np.zeros(self.n_steps + 1)
            g[0] = 1.0
            self._kernel0 = self.march(np.zeros(self.n_cells + 1), g)[:, -1].copy()
        return self._kernel0


def _check_u0(op: HeatOperator, u0) -> np.ndarray:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (op.n_cells + 1,):
        raise ValueError(f"u0 needs {op.n_cells + 1} nodal values, got {u0.shape}")
    if abs(u0[0]) > 1e-12:
        raise ValueError("u0 must vanish at x = -1")
    return u0


def _trace_values(op: HeatOperator, g) -> np.ndarray:
    if g is None:
        return np.zeros(op.n_steps + 1)
    values = g.values if isinstance(g, TraceSeries) else np.asarray(g, dtype=float)
    if values.shape != (op.n_steps + 1,):
        raise ValueError("flux trace does not match the time grid")
    return values


def solve_heat(op: HeatOperator, u0, g=None) -> Field:
    """Heat field with u(., -1) = 0, u(0, .) = u0 and d_x u(., 0) = g."""
    u0 = _check_u0(op, u0)
    values = op.march(u0, _trace_values(op, g))
    values[:, 0] = 0.0
    return Field(op.sgrid, op.tgrid, values)


def ntd_apply(op: HeatOperator, u0, g=None) -> TraceSeries:
    """(L_{u0} g)(t_n): the x = 0 row of :func:`solve_heat`."""
    u0 = _check_u0(op, u0)
    values = op.march(u0, _trace_values(op, g))
    return TraceSeries(op.tgrid, values[:, -1])


def ntd_free(op: HeatOperator, u0) -> TraceSeries:
    """L_{u0} applied to the zero flux."""
    return ntd_apply(op, u0, None)


def ntd_matrix(op: HeatOperator) -> np.ndarray:
    """Dense lower-triangular Toeplitz matrix of L_0 acting on g_1..g_n."""
    n = op.n_steps
    if n > MAX_DENSE_STEPS:
        raise ValueError(f"n_steps={n} exceeds the dense limit {MAX_DENSE_STEPS}")
    kern = op.kernel()
    idx = np.subtract.outer(np.arange(n), np.arange(n))
    mat = np.where(idx >= 0, kern[np.clip(idx, 0, None)], 0.0)
    return mat


def flux_trace(field: Field) -> TraceSeries:
    """d_x u(., 0) from the three-point one-sided difference."""
    u = np.asarray(field.values)
    dx = field.sgrid.dx
    return TraceSeries(field.tgrid, (3.0 * u[:, -1] - 4.0 * u[:, -2] + u[:, -3]) / (2.0 * dx))


def discrete_energy(u: np.ndarray, dx: float) -> np.ndarray:
    """0.5 * ||u||^2 per time level with half weight on the flux node."""
    w = np.full(u.shape[-1], dx)
    w[0] = w[-1] = 0.5 * dx
    return 0.5 * (u**2) @ w


def energy_identity_residual(field: Field, g, midpoint: bool = False) -> np.ndarray:
    """Residual of 1/2||u_n||^2 - 1/2||u_0||^2 + sum dt||d_x u||^2 - sum dt g u(.,0).

    With ``midpoint=False`` the dissipation and boundary work are sampled at
    the new level (rectangle rule), which leaves an O(dt) residual for any
    scheme.  ``midpoint=True`` averages consecutive levels; for
    Crank-Nicolson that is the scheme's own exact identity.
    """
    u = np.asarray(field.values)
    gv = g.values if isinstance(g, TraceSeries) else np.asarray(g, dtype=float)
    dx, dt = field.sgrid.dx, field.tgrid.dt
    energy = discrete_energy(u, dx)
    if midpoint:
        uu = 0.5 * (u[1:] + u[:-1])
        gg = 0.5 * (gv[1:] + gv[:-1])
    else:
        uu, gg = u[1:], gv[1:]
    grad_sq = np.sum(np.diff(uu, axis=1) ** 2, axis=1) / dx
    work = gg * uu[:, -1]
    rate = dt * (grad_sq - work)
    return energy[1:] - energy[0] + np.cumsum(rate)
