"""Run a reduced peel test and print how the debonded zone and energies evolve.

Usage: python demos/peel_front.py [--nx 32] [--tau 0.02] [--out demo_peel]
"""
from __future__ import annotations

import argparse
from importlib import resources
from pathlib import Path

import numpy as np

from thermodelam import parse_scenario, run
from thermodelam.export import run_summary, write_json, write_ledger_csv, write_plot_script
from thermodelam.stepper import Runtime


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nx", type=int, default=32)
    p.add_argument("--tau", type=float, default=0.02)
    p.add_argument("--out", default="demo_peel")
    args = p.parse_args()

    text = resources.files("thermodelam.scenarios").joinpath("peel.toml").read_text()
    text = (text.replace("nodes = [64]", f"nodes = [{args.nx}]")
            .replace("nodes_normal = [32, 32]", f"nodes_normal = [{args.nx // 2}, {args.nx // 2}]"))
    scenario = parse_scenario(text, name="peel-demo").with_tau(args.tau)
    x_interface = Runtime(scenario).grid.interface_coords[:, 0]

    def progress(k, state):
        if k % max(1, scenario.steps // 10) == 0:
            debonded = np.flatnonzero(state.z == 0)
            span = (f"[{x_interface[debonded].min():.3f}, {x_interface[debonded].max():.3f}]"
                    if debonded.size else "none")
            print(f"t={state.t:5.2f}  bonded={state.z.mean():.3f}  debonded x-range {span}")

    traj = run(scenario, progress=progress)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ledger_csv(traj, out / "ledger.csv")
    write_plot_script(out)
    summary = run_summary(traj)
    write_json(summary, out / "summary.json")
    r = summary["residuals"]
    print(f"dissipated {summary['dissipated']:.3e}, min theta {summary['min_theta']:.6f}, "
          f"min residuals {r['mechanical_min']:.2e} / {r['total_min']:.2e}")
    print(f"wrote {out}/ledger.csv; plot with: python {out}/plot_ledger.py")


if __name__ == "__main__":
    main()
