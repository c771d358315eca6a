"""Time-step refinement on the bundled thermal scenario.

Usage: python demos/refinement_study.py [0.04,0.02,0.01]
"""
from __future__ import annotations

import sys

from thermodelam import convergence_study, reference_scenario


def main():
    taus = [float(v) for v in (sys.argv[1] if len(sys.argv) > 1 else "0.04,0.02,0.01").split(",")]
    report = convergence_study(reference_scenario("thermal"), taus)
    print(f"{'tau':>8} {'energy gap':>12} {'regularization':>15}")
    for lv in report.levels:
        print(f"{lv.tau:8.4f} {lv.energy_gap:12.4e} {lv.regularization:15.4e}")
    print("successive differences:")
    for (a, b), d in zip(zip(taus, taus[1:]), report.differences):
        print(f"  {a:g} -> {b:g}: |du| {d['u']:.3e}  |dw| {d['w']:.3e}")
    print("fitted orders:", {k: (round(v, 3) if v is not None else None) for k, v in report.orders.items()})


if __name__ == "__main__":
    main()
