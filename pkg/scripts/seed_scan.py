"""Regularity probes, gain and saturation over several seeds.

Usage: python scripts/seed_scan.py [N_CELLS] [SEEDS]   e.g.  4096 0,1,2,3
"""

import sys

from heatwave.core import RunConfig
from heatwave.experiments import (mass_gain_experiment, regularity_probe, saturation_experiment,
                                  saturation_r2_list)

PROBES = [("plain", 3.0, 1.0), ("plain", 1.0, 3.0), ("point_mass", 4.0, 1.0)]


def scan(n_cells, seed):
    cfg = RunConfig(n_cells=n_cells, seed=seed)
    parts, ok = [], True
    for problem, r1, r2 in PROBES:
        rep = regularity_probe(problem, r1, r2, cfg)
        ok &= rep.passed
        parts += [f"{problem}({r1:g},{r2:g}).{c.quantity}={c.measured:.2f}"
                  for c in rep.checks if c.claimed]
    gain = mass_gain_experiment(1.0, cfg)
    ok &= gain.passed
    parts.append(f"gain h={gain.plain.check('h').measured:.2f}/{gain.mass.check('h').measured:.2f}")
    sat = saturation_experiment(1.5, saturation_r2_list(1.5), cfg, workers=4)
    ok &= sat.passed
    parts.append("sat=" + ",".join(f"{r.measured:.2f}" for r in sat.rows))
    return ok, " ".join(parts)


if __name__ == "__main__":
    n_cells = int(sys.argv[1]) if len(sys.argv) > 1 else 4096
    seeds = [int(s) for s in sys.argv[2].split(",")] if len(sys.argv) > 2 else [0, 1, 2, 3]
    all_ok = True
    for seed in seeds:
        ok, line = scan(n_cells, seed)
        all_ok &= ok
        print(f"seed {seed}: {'PASS' if ok else 'FAIL'} {line}", flush=True)
    sys.exit(0 if all_ok else 1)
