"""Mode-mixity law and the shear/opening heat comparison.

Prints the activation-energy ratio a(psi)/a_I over psi for a few
sensitivities, then runs the bundled pure-shear and pure-opening debond
scenarios and compares the interface heat they deposit.
"""
from __future__ import annotations

import numpy as np

from thermodelam import MixityLaw, activation_energy, reference_scenario, run


def main():
    psi = np.array([0.0, 30.0, 60.0, 80.0, 90.0])
    print("psi [deg]  " + "  ".join(f"{v:7.1f}" for v in psi))
    for lam in (0.2, 0.3, 0.5, 1.0):
        a = activation_energy(MixityLaw(a_I=1.0, sensitivity=lam), psi, degrees=True)
        print(f"lambda={lam:3.1f}  " + "  ".join(f"{v:7.3f}" for v in a))
    heat = {}
    for name in ("shear", "opening"):
        traj = run(reference_scenario(name))
        heat[name] = float(traj.column("dissipation").sum())
        print(f"{name:8s} debonded at step {traj.info.get('stopped_debonded')}, heat {heat[name]:.3e}")
    print(f"shear / opening heat ratio: {heat['shear'] / heat['opening']:.1f}")


if __name__ == "__main__":
    main()
