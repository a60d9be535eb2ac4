"""The eleven acceptance criteria at their stated tolerances.

Each test records a one-line PASS/FAIL summary that is printed at the end
of the pytest run (and also echoed to stdout, visible with ``-s``).
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE
from heatwave.cli import main
from heatwave.core import RunConfig, TraceSeries, make_grids
from heatwave.experiments import (build_data, convergence_study, decoupled_energy_check,
                                  energy_audit, mass_gain_experiment, regularity_probe,
                                  saturation_experiment, saturation_r2_list, smooth_config,
                                  solve_interface, solve_monolithic, zero_data)
from heatwave.wave import dalembert_initial, solve_wave_ibvp

TOL = 0.3
MIN_R2 = 0.9
# regularity runs need a long spectrum for the dyadic fits
REGULARITY_CONFIG = RunConfig(n_cells=4096, seed=0)


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_heat_oracle():
    table = convergence_study("heat_eigen", (128, 256, 512))
    err256 = table.values[1]
    ok = err256 <= 5e-4 and table.min_order >= 1.8
    record(1, ok, f"sup error at 256 = {err256:.3e}, orders = "
                  + ", ".join(f"{o:.2f}" for o in table.orders))


def test_criterion_02_exact_wave():
    _, wg, tg = make_grids(256)
    field = solve_wave_ibvp(np.sin(np.pi * wg.x), np.zeros(257), TraceSeries.zeros(tg))
    exact = np.sin(np.pi * wg.x[None, :]) * np.cos(np.pi * tg.t[:, None])
    err = float(np.max(np.abs(field.values - exact)))
    record(2, err <= 1e-12, f"max nodal error = {err:.3e}")


def test_criterion_03_dalembert():
    _, wg, _ = make_grids(256)
    val = dalembert_initial(np.sin(np.pi * wg.x), np.zeros(257), 0.25, 0.5)
    err = abs(val - math.sqrt(2) / 2)
    record(3, err <= 1e-12, f"v(0.25, 0.5) = {val:.15f}, error = {err:.3e}")


def test_criterion_04_interface_residuals():
    cfg = smooth_config(n_cells=256)
    _, plain = solve_interface("plain", build_data(cfg), cfg)
    mcfg = cfg.replace(problem="point_mass")
    _, mass = solve_interface("point_mass", build_data(mcfg), mcfg)
    table = convergence_study("mass_defect", (128, 256, 512, 1024))
    ok = (plain.residual <= 1e-12 and mass.relation_residuals["ntd"] <= 1e-12
          and mass.relation_residuals["kernel"] <= 1e-12 and table.min_order >= 0.9)
    record(4, ok, f"plain {plain.residual:.1e}, point mass {mass.relation_residuals['ntd']:.1e} / "
                  f"{mass.relation_residuals['kernel']:.1e}, defect orders "
                  + ", ".join(f"{o:.2f}" for o in table.orders))


def test_criterion_05_path_equivalence():
    plain = convergence_study("path_plain", (128, 256, 512))
    mass = convergence_study("path_mass", (128, 256, 512))
    ok = (plain.values[-1] <= 1e-2 and mass.values[-1] <= 2e-2
          and plain.decreasing and mass.decreasing)
    record(5, ok, "relative L2 of g: plain " + ", ".join(f"{v:.2e}" for v in plain.values)
                  + "; point mass " + ", ".join(f"{v:.2e}" for v in mass.values))


def test_criterion_06_kernel_triviality():
    zero_ok = True
    for problem in ("plain", "point_mass"):
        cfg = smooth_config(n_cells=128, problem=problem)
        _, sol = solve_interface(problem, zero_data(cfg), cfg)
        zero_ok &= not any(np.any(tr.values) for tr in (sol.g, sol.c, sol.h))
    table = convergence_study("kernel_identity", (128, 256, 512))
    ok = zero_ok and table.min_order >= 1.8
    record(6, ok, f"zero data give zero: {zero_ok}; identity orders "
                  + ", ".join(f"{o:.2f}" for o in table.orders))


PROBES = [("plain", 3.0, 1.0), ("plain", 1.0, 3.0), ("point_mass", 4.0, 1.0)]


def test_criterion_07_regularity_exponents():
    parts, ok = [], True
    for problem, r1, r2 in PROBES:
        rep = regularity_probe(problem, r1, r2, REGULARITY_CONFIG)
        for c in rep.checks:
            if c.claimed:
                ok &= c.ok(MIN_R2) and abs(c.delta) <= TOL
                parts.append(f"{problem}({r1:g},{r2:g}) {c.quantity}: "
                             f"{c.measured:.2f} vs {c.predicted:.2f} (r2={c.r_squared:.2f})")
    record(7, ok, "; ".join(parts))


def test_criterion_08_point_mass_gain():
    rep = mass_gain_experiment(1.0, REGULARITY_CONFIG)
    hp, hm = rep.plain.check("h"), rep.mass.check("h")
    ok = (abs(hp.measured - 2.5) <= TOL and abs(hm.measured - 2.5) <= TOL
          and hp.r_squared >= MIN_R2 and hm.r_squared >= MIN_R2
          and abs(hp.measured - hm.measured) <= TOL)
    record(8, ok, f"h plain {hp.measured:.2f}, h point mass {hm.measured:.2f}, "
                  f"difference {rep.difference:.2f} (control {rep.control.check('h').measured:.2f})")


def test_criterion_09_saturation():
    r2_list = saturation_r2_list(1.5)
    table = saturation_experiment(1.5, r2_list, REGULARITY_CONFIG, workers=4)
    ok = table.monotone
    for row in table.rows:
        if row.r2 >= 1.2:
            ok &= abs(row.measured - 1.0) <= TOL
        if row.r2 <= 0.6:
            ok &= abs(row.measured - row.r2) <= TOL
        ok &= row.r_squared >= MIN_R2
    record(9, ok, ", ".join(f"r2={r.r2:g}: {r.measured:.2f}" for r in table.rows))


def test_criterion_10_energy():
    incs = {}
    for problem in ("plain", "point_mass"):
        cfg = smooth_config(n_cells=512, problem=problem)
        incs[problem] = energy_audit(solve_monolithic(problem, build_data(cfg), cfg)).max_increment
    coarse, fine = decoupled_energy_check(128), decoupled_energy_check(256)
    order = math.log2(coarse.wave_variation / fine.wave_variation)
    ok = all(v <= 1e-8 for v in incs.values()) and order >= 1.8
    record(10, ok, f"max increment plain {incs['plain']:.2e}, point mass {incs['point_mass']:.2e}; "
                   f"decoupled wave energy order {order:.2f}")


def _bodies(directory):
    return {p.name: [l for l in p.read_text().splitlines() if not l.startswith("# timestamp:")]
            for p in sorted(directory.glob("*.csv"))}


@pytest.mark.parametrize("argv", [["solve"], ["energy"],
                                  ["probe", "--set", "n_cells=1024"]])
def test_criterion_11_determinism(tmp_path, argv):
    main(argv + ["--out", str(tmp_path / "a")])
    main(argv + ["--out", str(tmp_path / "b")])
    a, b = _bodies(tmp_path / "a"), _bodies(tmp_path / "b")
    ok = bool(a) and a == b
    prev = ACCEPTANCE.get(11, (True, ""))
    detail = (prev[1] + "; " if prev[1] else "") + f"{argv[0]}: {len(a)} CSV files identical={a == b}"
    record(11, ok and prev[0], detail)
