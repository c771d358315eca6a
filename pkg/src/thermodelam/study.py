"""Time-step refinement study on a fixed grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .stepper import Scenario, Trajectory, run


@dataclass
class LevelReport:
    tau: float
    steps: int
    energy_gap: float
    mechanical_slack: float
    regularization: float
    min_total_residual: float
    min_mechanical_residual: float
    scale: float
    failure: Optional[str] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False)


@dataclass
class StudyReport:
    levels: list
    differences: list
    orders: dict

    def as_dict(self) -> dict:
        return {
            "levels": [{k: v for k, v in vars(lv).items() if k != "trajectory"}
                       for lv in self.levels],
            "differences": self.differences,
            "orders": self.orders,
        }


def fitted_order(taus, values, floor: float = 1e-14) -> Optional[float]:
    """Least-squares slope of ``log(value)`` against ``log(tau)``.

    None when fewer than two values exceed ``floor`` (saturated quantities).
    """
    taus, values = np.asarray(taus, dtype=float), np.abs(np.asarray(values, dtype=float))
    keep = values > floor
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(taus[keep]), np.log(values[keep]), 1)[0])


def convergence_study(scenario: Scenario, taus, keep_trajectories: bool = False) -> StudyReport:
    """Run ``scenario`` for each step size in ``taus`` (strictly decreasing, at least 3).

    Per level: final total-energy gap, mechanical slack and regularization
    magnitude; between successive levels: max-norm differences of the final
    ``u``, ``w`` and ``z``.  A failing level stops the study (partial report).
    """
    taus = [float(t) for t in taus]
    if len(taus) < 3:
        raise ValueError("a convergence study needs at least three step sizes")
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("step sizes must be strictly decreasing")
    levels, finals = [], []
    for tau in taus:
        traj = run(scenario.with_tau(tau))
        last = traj.ledger[-1]
        tot = traj.column("total_residual")
        mech = traj.column("mechanical_residual")
        levels.append(LevelReport(
            tau=tau, steps=len(traj.ledger) - 1, energy_gap=float(last.total_residual),
            mechanical_slack=float(last.mechanical_residual),
            regularization=float(last.regularization),
            min_total_residual=float(tot.min()), min_mechanical_residual=float(mech.min()),
            scale=traj.scale, failure=str(traj.failure) if traj.failure else None,
            trajectory=traj if keep_trajectories else None))
        finals.append(traj.final)
        if traj.failure is not None:
            break
    diffs = []
    for a, b in zip(finals, finals[1:]):
        diffs.append({"u": float(np.abs(a.u - b.u).max()),
                      "w": float(np.abs(a.w - b.w).max()),
                      "z": float(np.abs(a.z - b.z).max())})
    lv_taus = [lv.tau for lv in levels]
    orders = {
        "energy_gap": fitted_order(lv_taus, [lv.energy_gap for lv in levels]),
        "mechanical_slack": fitted_order(lv_taus, [lv.mechanical_slack for lv in levels]),
        "regularization": fitted_order(lv_taus, [lv.regularization for lv in levels]),
    }
    for key in ("u", "w"):
        orders[f"difference_{key}"] = fitted_order(lv_taus[:len(diffs)], [d[key] for d in diffs])
    return StudyReport(levels, diffs, orders)
