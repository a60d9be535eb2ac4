import numpy as np
import pytest

from heatwave.core import RunConfig
from heatwave.experiments import (SATURATION_FRACTIONS, build_data, check_dyadic, field_norm_trend,
                                  convergence_study, fan_out, field_exponents, gain_prediction,
                                  heat_data, interface_profile, predicted_exponents,
                                  regularity_probe, run_solve, saturation_experiment,
                                  saturation_r2_list, zero_data)


def _only(problem, r1, r2):
    branches = predicted_exponents(problem, r1, r2)
    assert len(branches) == 1
    return branches[0]


def test_plain_wave_limited():
    b = _only("plain", 3.0, 1.0)
    assert b.label == "wave-limited"
    assert b.exponents == {"g": 1.0, "c": 1.5, "h": 2.5}
    assert b.claimed == ("g",)


def test_plain_heat_limited():
    b = _only("plain", 1.0, 3.0)
    assert b.label == "heat-limited"
    assert b.exponents["g"] == 0.75


def test_point_mass_branches():
    wave = _only("point_mass", 4.0, 1.0)
    assert wave.exponents == {"g": 1.5, "c": 2.0, "h": 3.0}
    assert wave.claimed == ("g", "c")
    mixed = _only("point_mass", 3.0, 1.0)
    assert mixed.label == "mixed"
    assert mixed.exponents["g"] == 1.25 and mixed.exponents["c"] == 2.0
    heat = _only("point_mass", 2.0, 3.0)
    assert heat.exponents == {"g": 0.75, "c": 1.75, "h": 2.75}


def test_ties_report_both_branches():
    branches = predicted_exponents("plain", 2.0, 1.25)
    assert [b.label for b in branches] == ["wave-limited", "heat-limited"]
    assert branches[0].exponents == branches[1].exponents


def test_excluded_values_flagged():
    assert "r2" in predicted_exponents("plain", 3.0, 1.0)[0].excluded
    assert predicted_exponents("plain", 3.0, 1.2)[0].excluded == ()
    assert "r1" in predicted_exponents("plain", 1.5, 3.0)[0].excluded
    with pytest.raises(ValueError):
        predicted_exponents("membrane", 2.0, 1.0)


def test_field_and_gain_predictions():
    assert field_exponents("plain", 3.0, 1.0) == {"u": 1.75, "v": 2.0}
    assert gain_prediction(1.0) == 2.5


def test_data_respect_compatibility():
    cfg = RunConfig(n_cells=64)
    data = build_data(cfg)
    x = cfg.grids()[1].x
    v0, v1 = data.wave_nodes(x)
    assert data.u0[0] == 0.0 and abs(data.u0[-1]) < 1e-12
    assert abs(v0[0]) < 1e-12 and abs(v0[-1]) < 1e-12
    z = zero_data(cfg)
    assert not np.any(z.u0)


def test_data_deterministic_in_seed():
    cfg = RunConfig(n_cells=64, seed=5)
    a, b = build_data(cfg), build_data(cfg)
    np.testing.assert_array_equal(a.u0, b.u0)
    c = build_data(cfg.replace(seed=6))
    assert not np.array_equal(a.u0, c.u0)


def test_interface_profile_support():
    x = np.linspace(-1, 0, 101)
    p = interface_profile(x, 1.0)
    assert np.all(p[x <= -0.95] == 0)
    assert p[-1] == 0.0


def test_heat_data_vanishes_at_ends():
    u0 = heat_data(2.0, 64, 64, 0, 0.05)
    assert u0[0] == 0.0 and abs(u0[-1]) < 1e-12


@pytest.mark.parametrize("problem", ["plain", "point_mass"])
@pytest.mark.parametrize("path", ["interface_reduced", "monolithic"])
def test_run_solve(problem, path):
    rep = run_solve(RunConfig(n_cells=64, problem=problem, solver_path=path))
    assert np.all(np.isfinite(rep.traces["h"]))
    assert rep.config["problem"] == problem and rep.residuals


def test_regularity_probe_report_structure():
    rep = regularity_probe("plain", 3.0, 1.0, RunConfig(n_cells=1024))
    assert {c.quantity for c in rep.checks} == {"g", "c", "h"}
    assert rep.check("g").claimed and not rep.check("h").claimed
    assert rep.warnings


def test_saturation_list_straddles_plateau():
    r2 = saturation_r2_list(1.5)
    assert len(r2) == len(SATURATION_FRACTIONS)
    assert r2[0] < 1.0 < r2[-1]
    with pytest.raises(ValueError):
        saturation_experiment(1.5, [0.2, 0.4], RunConfig(n_cells=64))


def test_fan_out_keeps_order():
    assert fan_out(abs, [-3, 2, -1], workers=2) == [3, 2, 1]


def test_dyadic_resolution_check():
    assert check_dyadic([64, 128, 256]) == (64, 128, 256)
    with pytest.raises(ValueError):
        check_dyadic([64, 128])
    with pytest.raises(ValueError):
        check_dyadic([64, 100, 200])
    with pytest.raises(ValueError):
        convergence_study("nothing", (64, 128, 256))


def test_heat_eigen_convergence():
    table = convergence_study("heat_eigen", (128, 256, 512))
    assert table.decreasing and table.min_order >= 1.8


@pytest.mark.parametrize("problem, r1, r2", [("plain", 3.0, 1.0), ("point_mass", 4.0, 1.0)])
def test_field_norms_bounded_below_and_diverging_above(problem, r1, r2):
    trend = field_norm_trend(problem, r1, r2, RunConfig(n_cells=1024))
    assert trend.resolutions == (256, 512, 1024)
    assert trend.consistent
