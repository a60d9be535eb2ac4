import numpy as np
import pytest

from heatwave.core import (ConfigError, Field, RunConfig, TraceSeries,
                           cumulative_trapezoid, linear_interp, make_grids)


def test_grids_share_step():
    sg, wg, tg = make_grids(64)
    assert sg.dx == wg.dx == tg.dt == 1 / 64
    assert sg.x[0] == -1 and sg.x[-1] == 0
    assert wg.x[0] == 0 and wg.x[-1] == 1
    assert len(tg.t) == 65


def test_grid_rejects_incommensurate_end_time():
    with pytest.raises(ValueError):
        make_grids(64, t_end=1.0 / 3.0)
    with pytest.raises(ValueError):
        make_grids(2)


def test_trace_shape_checked():
    _, _, tg = make_grids(16)
    with pytest.raises(ValueError):
        TraceSeries(tg, np.zeros(10))
    tr = TraceSeries.zeros(tg)
    assert len(tr) == 17
    with pytest.raises(ValueError):
        tr.values[0] = 1.0


def test_field_boundary_column():
    sg, wg, tg = make_grids(8)
    vals = np.ones((9, 9))
    vals[:, 0] = 0.0
    assert Field(sg, tg, vals).boundary_ok()
    assert not Field(wg, tg, vals).boundary_ok()
    with pytest.raises(ValueError):
        Field(sg, tg, np.zeros((3, 3)))


def test_linear_interp_and_trapezoid():
    _, _, tg = make_grids(10)
    tr = TraceSeries.from_function(tg, lambda t: 2 * t + 1)
    assert linear_interp(tr, 0.35) == pytest.approx(1.7)
    with pytest.raises(ValueError):
        linear_interp(tr, 1.5)
    integral = cumulative_trapezoid(tr.values, tg.dt)
    assert integral[-1] == pytest.approx(2.0)


def test_config_defaults_follow_resolution():
    cfg = RunConfig()
    assert cfg.n_steps == cfg.n_modes == 512
    fine = cfg.replace(n_cells=1024)
    assert fine.n_steps == fine.n_modes == 1024


@pytest.mark.parametrize("changes, field", [
    ({"problem": "membrane"}, "problem"),
    ({"r1": 0.5}, "r1"),
    ({"r2": 0.1}, "r2"),
    ({"s": 0.1}, "s"),
    ({"n_steps": 100}, "n_steps"),
    ({"omega": 0.0}, "omega"),
    ({"scheme": "leapfrog"}, "scheme"),
    ({"t_end": 2.0}, "t_end"),
])
def test_config_rejects_invalid(changes, field):
    with pytest.raises(ConfigError) as err:
        RunConfig(**changes)
    assert err.value.field_name == field


def test_point_mass_allows_lower_wave_regularity():
    assert RunConfig(problem="point_mass", r2=-0.2).r2 == -0.2
