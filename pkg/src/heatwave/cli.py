"""Command-line entry point: ``heatwave <subcommand> [--config PATH] [--out DIR] [--set K=V] [--seed N]``.

Every run writes CSV series plus ``summary.csv`` and ``report.txt`` to the
output directory.  CSV files start with three comment lines (config hash,
timestamp, units); the timestamp line is the only part that changes
between identical runs.

Exit codes: 0 all checks passed, 1 some check failed, 2 configuration
error, 3 coupling subiterations did not converge, 4 regularity estimation
failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import experiments as ex
from .core import ConfigError, RunConfig
from .monolithic import CouplingError
from .sobolev import EstimationError

SUBCOMMANDS = ("solve", "probe", "gain", "saturate", "converge", "xval", "energy")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_COUPLING, EXIT_ESTIMATION = 0, 1, 2, 3, 4

# acceptance levels of the cross-path and energy checks
XVAL_TOL = {"plain": 1e-2, "point_mass": 2e-2}
ENERGY_TOL = 1e-8
CONVERGENCE_EXPECTED = {
    "heat_eigen": 1.8,
    "kernel_identity": 1.8,
    "mass_defect": 0.9,
    "energy_residual": 0.9,
    "path_plain": 0.0,
    "path_mass": 0.0,
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"n_cells", "n_steps", "seed", "max_iters", "n_modes"}
_STR_KEYS = {"problem", "solver_path", "scheme"}


# --- configuration -------------------------------------------------------------


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise ConfigError(key, f"unknown key; known keys: {', '.join(_FIELD_TYPES)}")
    if value is None:
        if key in ("n_steps", "n_modes"):
            return None
        raise ConfigError(key, "needs a value")
    if isinstance(value, bool):
        raise ConfigError(key, f"expected a number or name, got {value!r}")
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a name, got {value!r}")
        return value
    if isinstance(value, str):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if key in _INT_KEYS:
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _parse_override(item: str):
    if "=" not in item:
        raise ConfigError(item, "override must look like KEY=VALUE")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as err:
        raise ConfigError(key, f"cannot parse value {raw!r}: {err}") from err
    return key, value


def parse_config(path=None, overrides=()) -> RunConfig:
    """Flat ``key: value`` YAML file plus ``KEY=VALUE`` overrides, validated by RunConfig."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError("config", f"cannot read {path}: {err}") from err
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as err:
            mark = getattr(err, "problem_mark", None)
            where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
            raise ConfigError("config", f"parse error in {path}{where}: {err}") from err
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config", "the file must hold flat key: value pairs")
        for key, value in loaded.items():
            if isinstance(value, (dict, list)):
                raise ConfigError(str(key), "nested values are not supported")
            values[str(key)] = _coerce(str(key), value)
    for item in overrides:
        key, value = _parse_override(item)
        values[key] = _coerce(key, value)
    return RunConfig(**values)


def config_hash(config: RunConfig) -> str:
    text = json.dumps(config.as_dict(), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# --- output ----------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def write_csv(path: Path, columns: dict, units: dict, chash: str, timestamp: str) -> Path:
    """Header comments, a column-name row, then one row per sample (17 significant digits)."""
    names = list(columns)
    length = {len(v) for v in columns.values()}
    if len(length) != 1:
        raise ValueError(f"columns of {path.name} differ in length")
    lines = [
        f"# config_hash: {chash}",
        f"# timestamp: {timestamp}",
        "# units: " + ", ".join(f"{n} [{units.get(n, '1')}]" for n in names),
        ",".join(names),
    ]
    for row in zip(*columns.values()):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


@dataclasses.dataclass
class RunOutput:
    """What a subcommand produced: CSV tables, report sections and pass flags."""

    tables: dict = dataclasses.field(default_factory=dict)
    units: dict = dataclasses.field(default_factory=dict)
    sections: list = dataclasses.field(default_factory=list)
    flags: list = dataclasses.field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.flags)


def emit_csv(output: RunOutput, out_dir: Path, config: RunConfig, timestamp: str | None = None) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    timestamp = timestamp or datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    chash = config_hash(config)
    return [write_csv(out_dir / f"{name}.csv", cols, output.units, chash, timestamp)
            for name, cols in output.tables.items()]


def emit_report(output: RunOutput, out_dir: Path, command: str, config: RunConfig,
                runtime: float) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"heatwave {__version__} {command}", f"config_hash: {config_hash(config)}", "", "config:"]
    lines += [f"  {k}: {v}" for k, v in config.as_dict().items()]
    for title, body in output.sections:
        lines += ["", f"{title}:"] + [f"  {line}" for line in body]
    lines += ["", f"result: {'PASS' if output.passed else 'FAIL'}", f"runtime: {runtime:.2f} s"]
    path = out_dir / "report.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


# --- subcommands -------------------------------------------------------------------


def _summary(rows: list) -> dict:
    keys = list(rows[0])
    return {k: [r[k] for r in rows] for k in keys}


def _check_row(run: str, c: ex.ExponentCheck, min_r2: float) -> dict:
    return {"run": run, "quantity": c.quantity, "predicted": c.predicted, "measured": c.measured,
            "delta": c.delta, "tol": c.tolerance, "r_squared": c.r_squared, "window": c.window,
            "claimed": c.claimed, "pass": c.ok(min_r2)}


def _branch_lines(problem, r1, r2):
    return [f"{problem} {b.label}: {b.condition} -> "
            + ", ".join(f"{q} {v:g}" for q, v in b.exponents.items())
            + (f" (near excluded {', '.join(b.excluded)})" if b.excluded else "")
            for b in ex.predicted_exponents(problem, r1, r2)]


def _exponent_lines(rows):
    out = ["run        q  predicted  measured   delta    r2     window    claimed  pass"]
    for r in rows:
        out.append(f"{r['run']:<10} {r['quantity']}  {r['predicted']:9.3f}  {r['measured']:8.3f}  "
                   f"{r['delta']:+6.3f}  {r['r_squared']:5.3f}  {r['window']:<8}  "
                   f"{str(r['claimed']):<7}  {r['pass']}")
    return out


def _report_tables(out: RunOutput, rep: ex.RegularityReport, run: str):
    out.tables[f"traces_{run}"] = rep.traces
    n = len(next(iter(rep.block_energies.values())))
    out.tables[f"dyadic_{run}"] = {"j": list(range(n)),
                                   **{f"E_{q}": list(e) for q, e in rep.block_energies.items()}}


def cmd_solve(config: RunConfig) -> RunOutput:
    rep = ex.run_solve(config)
    out = RunOutput(units={"t": "s"})
    out.tables["traces"] = rep.traces
    rows = [{"quantity": k, "value": v} for k, v in rep.residuals.items()]
    out.tables["summary"] = _summary(rows)
    out.sections.append(("residuals", [f"{k}: {v:.3e}" for k, v in rep.residuals.items()]))
    if config.solver_path == "monolithic":
        out.flags.append(rep.residuals["coupling"] <= config.tol_c)
    return out


def cmd_probe(config: RunConfig) -> RunOutput:
    rep = ex.regularity_probe(config.problem, config.r1, config.r2, config)
    out = RunOutput(units={"t": "s"})
    rows = [_check_row("probe", c, rep.min_r_squared) for c in rep.checks]
    out.tables["summary"] = _summary(rows)
    _report_tables(out, rep, "probe")
    out.sections.append(("branch", _branch_lines(config.problem, config.r1, config.r2)))
    out.sections.append(("exponents", _exponent_lines(rows)))
    if rep.warnings:
        out.sections.append(("warnings", list(rep.warnings)))
    trend = ex.field_norm_trend(config.problem, config.r1, config.r2, config)
    _trend_output(out, trend)
    out.flags.append(rep.passed)
    return out


def _trend_output(out: RunOutput, trend: ex.FieldTrend):
    """Field norms under refinement; reported, not part of the pass flags."""
    keys = list(trend.norms)
    out.tables["field_norms"] = {
        "n_cells": list(trend.resolutions),
        **{f"{name}_{side}": list(trend.norms[(name, side)]) for name, side in keys},
    }
    lines = []
    for name, side in keys:
        vals = ", ".join(f"{v:.4g}" for v in trend.norms[(name, side)])
        lines.append(f"{name} at s={trend.exponents[(name, side)]:.3f} ({side}): {vals} -> "
                     f"{trend.verdict(name, side)}")
    lines.append(f"consistent with predicted exponents: {trend.consistent}")
    out.sections.append((f"field norms, n_cells {', '.join(map(str, trend.resolutions))}", lines))


def cmd_gain(config: RunConfig) -> RunOutput:
    rep = ex.mass_gain_experiment(config.s, config)
    out = RunOutput(units={"t": "s"})
    rows = []
    for run, r in (("plain", rep.plain), ("mass", rep.mass), ("control", rep.control)):
        rows.append(_check_row(run, r.check("h"), r.min_r_squared))
        _report_tables(out, r, run)
    rows[-1]["pass"] = rep.control_ok
    out.tables["summary"] = _summary(rows)
    out.sections.append(("exponents", _exponent_lines(rows)))
    out.sections.append(("comparison", [
        f"predicted h exponent in both runs: {rep.predicted_h:g}",
        f"|s_plain - s_mass| = {rep.difference:.3f} (tol {rep.tolerance:g})",
        f"control (plain data, point mass) not rougher than plain: {rep.control_ok}",
    ]))
    out.flags.append(rep.passed)
    return out


def cmd_saturate(config: RunConfig) -> RunOutput:
    r2_list = ex.saturation_r2_list(config.r1)
    table = ex.saturation_experiment(config.r1, r2_list, config)
    rows = [{"r2": r.r2, "predicted": r.predicted, "measured": r.measured,
             "delta": r.measured - r.predicted, "tol": table.tolerance, "r_squared": r.r_squared,
             "window": r.window, "pass": table.row_ok(r)} for r in table.rows]
    out = RunOutput()
    out.tables["summary"] = _summary(rows)
    body = [f"r1 = {config.r1:g}, plateau r1/2 + 1/4 = {table.plateau:g}"]
    body += [f"r2 {r['r2']:6.3f}  predicted {r['predicted']:6.3f}  measured {r['measured']:6.3f}"
             f"  r2fit {r['r_squared']:5.3f}  {r['pass']}" for r in rows]
    body.append(f"monotone within {table.monotone_slack:g}: {table.monotone}")
    out.sections.append(("saturation", body))
    out.flags.append(table.passed)
    return out


def cmd_converge(config: RunConfig) -> RunOutput:
    n = config.n_cells
    if n % 4 or n // 4 < 8:
        raise ConfigError("n_cells", "converge needs n_cells divisible by 4 with n_cells/4 >= 8")
    resolutions = (n // 4, n // 2, n)
    out = RunOutput()
    rows, body = [], []
    for name, expected in CONVERGENCE_EXPECTED.items():
        table = ex.convergence_study(name, resolutions)
        ok = table.min_order >= expected and table.decreasing
        for k, (res, val) in enumerate(zip(table.resolutions, table.values)):
            order = table.orders[k - 1] if k else float("nan")
            rows.append({"experiment": name, "n_cells": res, "value": val, "order": order,
                         "expected_order": expected, "pass": ok})
        body.append(f"{name}: values {', '.join(f'{v:.3e}' for v in table.values)}; "
                    f"orders {', '.join(f'{o:.2f}' for o in table.orders)} (need >= {expected:g})")
        out.flags.append(ok)
    out.tables["summary"] = _summary(rows)
    out.sections.append(("orders", body))
    return out


def cmd_xval(config: RunConfig) -> RunOutput:
    xv = ex.cross_validate(config.problem, ex.build_data(config), config)
    rows = [{"quantity": q, "rel_l2": d[0], "sup": d[1]} for q, d in xv.differences.items()]
    out = RunOutput()
    out.tables["summary"] = _summary(rows)
    tol = XVAL_TOL[config.problem]
    ok = xv.rel_l2("g") <= tol
    out.sections.append(("differences", [f"{r['quantity']}: rel L2 {r['rel_l2']:.3e}, sup {r['sup']:.3e}"
                                         for r in rows] + [f"g within {tol:g}: {ok}"]))
    out.flags.append(ok)
    return out


def cmd_energy(config: RunConfig) -> RunOutput:
    sol = ex.solve_monolithic(config.problem, ex.build_data(config), config)
    audit = ex.energy_audit(sol)
    dt = sol.u.tgrid.dt
    t_half = (np.arange(len(audit.energy)) + 0.5) * dt
    inc = np.concatenate([[0.0], audit.increments])
    out = RunOutput(units={"t_half": "s"})
    out.tables["energy"] = {"t_half": t_half, "energy": audit.energy, "increment": inc,
                            "dissipation": audit.dissipation[:-1]}
    out.tables["summary"] = _summary([
        {"quantity": "max_increment", "value": audit.max_increment},
        {"quantity": "identity_residual", "value": audit.identity_residual},
    ])
    ok = audit.max_increment <= ENERGY_TOL
    out.sections.append(("energy", [f"max increment {audit.max_increment:.3e} (tol {ENERGY_TOL:g})",
                                    f"identity residual {audit.identity_residual:.3e}"]))
    out.flags.append(ok)
    return out


COMMANDS = {
    "solve": cmd_solve,
    "probe": cmd_probe,
    "gain": cmd_gain,
    "saturate": cmd_saturate,
    "converge": cmd_converge,
    "xval": cmd_xval,
    "energy": cmd_energy,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatwave", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", metavar="PATH", help="flat key: value YAML file")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="override one config key (repeatable)")
    parser.add_argument("--seed", metavar="N", type=int, help="shorthand for --set seed=N")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    start = time.perf_counter()
    try:
        output = COMMANDS[args.subcommand](config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except CouplingError as err:
        print(f"coupling error: {err}", file=sys.stderr)
        return EXIT_COUPLING
    except EstimationError as err:
        print(f"estimation error: {err}", file=sys.stderr)
        return EXIT_ESTIMATION
    runtime = time.perf_counter() - start
    emit_csv(output, out_dir, config)
    emit_report(output, out_dir, args.subcommand, config, runtime)
    print(f"{args.subcommand}: {'PASS' if output.passed else 'FAIL'} ({out_dir})")
    return EXIT_OK if output.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
