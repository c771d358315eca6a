"""CSV/JSON exporters for trajectories and studies.

File schemas
------------
``ledger.csv``
    ``t`` followed by every :class:`EnergyLedger` field in declaration order;
    one row per completed step (the initial state is not a row).
``fields_KKKK.csv``
    Columns ``kind, index, x0..x{d-1}, u0..u{d-1}, w, theta, z, jump0..jump{d-1},
    psi_deg``.  Node rows (``kind = node``) leave the interface columns empty,
    interface rows (``kind = interface``) carry the plus-side coordinates and
    leave ``u, w, theta`` empty.
``summary.json``
    See :func:`run_summary` and :func:`study_summary`.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .energetics import EnergyLedger, semistability_residual
from .grid import jump
from .material import temperature_of_enthalpy
from .mixity import mixity_angle


def _num(v) -> str:
    return repr(float(v))


def write_ledger_csv(trajectory, path) -> Path:
    path = Path(path)
    cols = EnergyLedger.columns()
    tau = trajectory.scenario.tau
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t"] + cols)
        for row in trajectory.ledger[1:]:
            d = row.as_dict()
            out.writerow([_num(row.step * tau)] + [d[c] if c == "step" else _num(d[c]) for c in cols])
    return path


def field_columns(dim: int) -> list:
    xs = [f"x{i}" for i in range(dim)]
    return (["kind", "index"] + xs + [f"u{i}" for i in range(dim)] + ["w", "theta", "z"]
            + [f"jump{i}" for i in range(dim)] + ["psi_deg"])


def write_fields_csv(trajectory, state, path) -> Path:
    g, s = trajectory.grid, trajectory.scenario
    d = g.dim
    theta = np.asarray(temperature_of_enthalpy(s.material.heat_capacity, state.w), dtype=float)
    jmp = jump(g, state.u)
    psi = np.atleast_1d(mixity_angle(s.mixity, jmp, g.normal, degrees=True))
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(field_columns(d))
        blank_i = [""] * (d + 1)
        for n in range(g.n_nodes):
            out.writerow(["node", n] + [_num(c) for c in g.coords[n]]
                         + [_num(c) for c in state.u[n]]
                         + [_num(state.w[n]), _num(theta[n]), ""] + blank_i)
        for c in range(g.n_interface):
            out.writerow(["interface", c] + [_num(v) for v in g.interface_coords[c]]
                         + [""] * (d + 2) + [_num(state.z[c])]
                         + [_num(v) for v in jmp[c]] + [_num(psi[c])])
    return path


def write_snapshots(trajectory, outdir) -> list:
    outdir = Path(outdir)
    return [write_fields_csv(trajectory, st, outdir / f"fields_{st.k:04d}.csv")
            for st in trajectory.snapshots]


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def run_summary(trajectory, seed: int = 0, tolerance: float = 1e-8) -> dict:
    """Final energies, extrema and residual checks of one run."""
    L = trajectory.ledger
    last = L[-1]
    scale = trajectory.scale
    mech = trajectory.column("mechanical_residual")
    tot = trajectory.column("total_residual")
    s, g = trajectory.scenario, trajectory.grid
    semi = semistability_residual(g, s.mixity, s.material.adhesive, trajectory.final.u,
                                  trajectory.final.z, trials=100, seed=seed)
    ok = bool(mech.min() >= -tolerance * scale and tot.min() >= -tolerance * scale)
    return _clean({
        "scenario": s.name,
        "tau": s.tau,
        "coupling": s.coupling,
        "steps_requested": s.steps,
        "steps_completed": len(L) - 1,
        "failure": str(trajectory.failure) if trajectory.failure is not None else None,
        "final": {
            "t": last.step * s.tau,
            "kinetic": last.kinetic,
            "stored": last.stored,
            "thermal": last.thermal,
            "bonded_fraction": last.bonded_fraction,
            "regularization": last.regularization,
        },
        "dissipated": float(trajectory.column("dissipation")[1:].sum()),
        "min_theta": float(trajectory.column("min_theta").min()),
        "min_enthalpy": float(trajectory.column("min_enthalpy").min()),
        "max_cone_violation": float(trajectory.column("max_cone_violation").max()),
        "energy_scale": scale,
        "residuals": {
            "mechanical_min": float(mech.min()),
            "mechanical_max": float(mech.max()),
            "total_min": float(tot.min()),
            "total_max": float(tot.max()),
            "final_total_gap": float(tot[-1]),
            "tolerance": tolerance * scale,
        },
        "semistability_residual": semi,
        "seed": seed,
        "inequalities_hold": ok,
    })


def study_summary(report, seed: int = 0) -> dict:
    return _clean({"seed": seed, **report.as_dict()})


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n")
    return path


PLOT_SCRIPT = '''"""Plot the energy ledger written next to this file (needs matplotlib)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
with (here / "ledger.csv").open() as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 8))
for name in ("kinetic", "stored", "thermal"):
    axes[0].plot(t, [float(r[name]) for r in rows], label=name)
axes[0].legend()
axes[0].set_ylabel("energy")
for name in ("mechanical_residual", "total_residual"):
    axes[1].plot(t, [float(r[name]) for r in rows], label=name)
axes[1].axhline(0.0, color="k", lw=0.5)
axes[1].legend()
axes[1].set_ylabel("inequality slack")
axes[2].plot(t, [float(r["bonded_fraction"]) for r in rows], label="bonded fraction")
axes[2].plot(t, [float(r["min_theta"]) for r in rows], label="min theta")
axes[2].legend()
axes[2].set_xlabel("t")
fig.tight_layout()
fig.savefig(here / "ledger.png", dpi=120)
'''


def write_plot_script(outdir) -> Path:
    path = Path(outdir) / "plot_ledger.py"
    path.write_text(PLOT_SCRIPT)
    return path
