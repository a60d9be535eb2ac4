"""Grids, sampled functions and run configuration shared by every solver.

Both spatial domains have unit length: the heat equation lives on (-1, 0)
and the wave equation on (0, 1).  A single ``n_cells`` therefore fixes the
spacing of both, and the time step equals the wave spacing so that the
leapfrog scheme moves exactly along characteristics.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

HEAT = "heat"
WAVE = "wave"

PROBLEMS = ("plain", "point_mass")
SOLVER_PATHS = ("monolithic", "interface_reduced")
SCHEMES = ("crank_nicolson", "implicit_euler")


class ConfigError(ValueError):
    """A configuration value is outside its admissible range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpaceGrid:
    domain: str
    n_cells: int

    def __post_init__(self):
        if self.domain not in (HEAT, WAVE):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.n_cells < 1:
            raise ValueError("n_cells must be positive")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def left(self) -> float:
        return -1.0 if self.domain == HEAT else 0.0

    @property
    def x(self) -> np.ndarray:
        return self.left + np.arange(self.n_cells + 1) * self.dx


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.t_end <= 0 or self.n_steps < 1:
            raise ValueError("TimeGrid needs t_end > 0 and n_steps >= 1")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class TraceSeries:
    """A scalar function of time sampled on every node of a TimeGrid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"trace has {self.values.shape} samples, grid needs {self.grid.n_steps + 1}"
            )

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "TraceSeries":
        return cls(grid, np.zeros(grid.n_steps + 1))

    @classmethod
    def from_function(cls, grid: TimeGrid, func) -> "TraceSeries":
        return cls(grid, func(grid.t))

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Field:
    """Space-time array, one row per time level."""

    sgrid: SpaceGrid
    tgrid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        expected = (self.tgrid.n_steps + 1, self.sgrid.n_cells + 1)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape}, expected {expected}")

    def boundary_ok(self, atol: float = 0.0) -> bool:
        """Whether the homogeneous Dirichlet column (x=-1 or x=1) holds."""
        col = self.values[:, 0] if self.sgrid.domain == HEAT else self.values[:, -1]
        return bool(np.all(np.abs(col) <= atol))


def make_grids(n_cells: int, t_end: float = 1.0):
    """Heat grid, wave grid and the shared time grid with dt = dx.

    ``t_end * n_cells`` has to be an integer, otherwise no time grid with
    dt = dx reaches ``t_end`` exactly.
    """
    if int(n_cells) != n_cells or n_cells < 4:
        raise ValueError(f"n_cells must be an integer >= 4, got {n_cells}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    n_cells = int(n_cells)
    n_steps = int(round(t_end * n_cells))
    if n_steps < 1 or abs(n_steps - t_end * n_cells) > 1e-9 * max(1.0, t_end * n_cells):
        raise ValueError(f"t_end={t_end} is not a multiple of dx=1/{n_cells}")
    return SpaceGrid(HEAT, n_cells), SpaceGrid(WAVE, n_cells), TimeGrid(float(t_end), n_steps)


def linear_interp(trace: TraceSeries, t: float) -> float:
    grid = trace.grid
    if not (0.0 <= t <= grid.t_end * (1 + 1e-14)):
        raise ValueError(f"t={t} outside [0, {grid.t_end}]")
    pos = min(t / grid.dt, float(grid.n_steps))
    i = min(int(np.floor(pos)), grid.n_steps - 1)
    w = pos - i
    return float((1.0 - w) * trace.values[i] + w * trace.values[i + 1])


def cumulative_trapezoid(values: np.ndarray, dt: float) -> np.ndarray:
    """Running trapezoid integral starting from 0 at the first node."""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]))
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; every key of the config file is a field."""

    problem: str = "plain"
    solver_path: str = "interface_reduced"
    r1: float = 2.0
    r2: float = 1.0
    s: float = 1.0
    n_cells: int = 512
    n_steps: Optional[int] = None
    t_end: float = 1.0
    seed: int = 0
    scheme: str = "crank_nicolson"
    omega: float = 0.5
    tol_c: float = 1e-10
    max_iters: int = 50
    margin_delta: float = 0.05
    n_modes: Optional[int] = None
    tolerance_exponent: float = 0.3

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError("problem", f"must be one of {PROBLEMS}, got {self.problem!r}")
        if self.solver_path not in SOLVER_PATHS:
            raise ConfigError("solver_path", f"must be one of {SOLVER_PATHS}")
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"must be one of {SCHEMES}")
        if not self.r1 >= 1:
            raise ConfigError("r1", f"requires r1 >= 1, got {self.r1}")
        r2_min = 0.25 if self.problem == "plain" else -0.25
        if not self.r2 >= r2_min:
            raise ConfigError("r2", f"requires r2 >= {r2_min} for problem {self.problem}, got {self.r2}")
        if not self.s >= 0.25:
            raise ConfigError("s", f"requires s >= 1/4, got {self.s}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ConfigError("n_cells", f"requires integer n_cells >= 4, got {self.n_cells}")
        if not self.t_end > 0:
            raise ConfigError("t_end", "requires t_end > 0")
        if self.solver_path == "interface_reduced" and self.t_end != 1.0:
            raise ConfigError("t_end", "interface_reduced path is fixed at t_end = 1")
        expected_steps = self.t_end * self.n_cells
        if abs(expected_steps - round(expected_steps)) > 1e-9:
            raise ConfigError("t_end", "t_end * n_cells must be an integer (dt = dx)")
        if self.n_steps is None:
            object.__setattr__(self, "n_steps", int(round(expected_steps)))
        elif self.n_steps != round(expected_steps):
            raise ConfigError(
                "n_steps", f"must equal t_end * n_cells = {int(round(expected_steps))} (dt = dx)"
            )
        if not 0 < self.omega <= 1:
            raise ConfigError("omega", "requires 0 < omega <= 1")
        if not self.tol_c > 0:
            raise ConfigError("tol_c", "requires tol_c > 0")
        if self.max_iters < 1:
            raise ConfigError("max_iters", "requires max_iters >= 1")
        if not self.margin_delta > 0:
            raise ConfigError("margin_delta", "requires margin_delta > 0")
        if self.n_modes is None:
            # data are synthesized with one mode per time step
            object.__setattr__(self, "n_modes", self.n_steps)
        if int(self.n_modes) != self.n_modes or self.n_modes < 8:
            raise ConfigError("n_modes", "requires n_modes >= 8")
        if not self.tolerance_exponent > 0:
            raise ConfigError("tolerance_exponent", "requires tolerance_exponent > 0")

    def replace(self, **changes) -> "RunConfig":
        if "n_cells" in changes or "t_end" in changes:
            changes.setdefault("n_steps", None)
            changes.setdefault("n_modes", None)
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def grids(self):
        return make_grids(self.n_cells, self.t_end)
