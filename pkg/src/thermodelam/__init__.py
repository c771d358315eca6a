"""Mixed-mode adhesive delamination between two thermo-visco-elastic blocks.

A structured finite-difference discretization in space is combined with a
semi-implicit time step: a convex minimization for the displacement, a
pointwise threshold rule for the bonding field and an implicit enthalpy
equation.  Every run records an energy ledger that audits the discrete
mechanical and total energy inequalities.
"""
from __future__ import annotations

from .energetics import (EnergyLedger, check_mechanical_inequality, check_total_inequality,
                         clausius_duhem_monitor, dissipation_variation, entropy_production,
                         kinetic_energy, semistability_residual)
from .errors import ConfigurationError, QuadratureError, ScenarioParseError, StepFailure
from .grid import (GeometrySpec, TwoBlockGrid, build_two_block_grid, jump, stored_energy,
                   strain, strain_gradient, viscous_energy_rate)
from .material import (ConductivityLaw, HeatCapacityLaw, MaterialSet, TransmissionLaw,
                       enthalpy_of_temperature, rescaled_conductivity, temperature_of_enthalpy,
                       validate_material)
from .mixity import (MixityLaw, activation_energy, alpha0, alpha0_grad, check_alpha0_convexity,
                     mixity_angle, split_a0_a1)
from .scenario import load_scenario, parse_scenario, reference_scenario
from .solvers import SolverSettings, solve_u_step, solve_w_step, solve_z_step
from .stepper import (InitialData, LoadCase, Scenario, SimState, Trajectory, advance,
                      initialize, local_means, run)
from .study import convergence_study

__all__ = [
    "ConductivityLaw", "ConfigurationError", "EnergyLedger", "GeometrySpec", "HeatCapacityLaw",
    "InitialData", "LoadCase", "MaterialSet", "MixityLaw", "QuadratureError", "Scenario",
    "ScenarioParseError", "SimState", "SolverSettings", "StepFailure", "Trajectory",
    "TransmissionLaw", "TwoBlockGrid", "activation_energy", "advance", "alpha0", "alpha0_grad",
    "build_two_block_grid", "check_alpha0_convexity", "check_mechanical_inequality",
    "check_total_inequality", "clausius_duhem_monitor", "convergence_study",
    "dissipation_variation", "enthalpy_of_temperature", "entropy_production", "initialize",
    "jump", "kinetic_energy", "load_scenario", "local_means", "mixity_angle", "parse_scenario",
    "reference_scenario", "rescaled_conductivity", "run", "semistability_residual",
    "solve_u_step", "solve_w_step", "solve_z_step", "split_a0_a1", "stored_energy", "strain",
    "strain_gradient", "temperature_of_enthalpy", "validate_material", "viscous_energy_rate",
]
